import logging
import os
import shutil
from dataclasses import asdict, dataclass
from pathlib import Path

import pandas as pd
import streamlit as st

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass(frozen=True)
class Settings:
    threads: int = 1
    log_level: str = "WARNING"

    @classmethod
    def from_env(cls, **overrides) -> "Settings":
        """
        Reads WLTOOL_THREADS and WLTOOL_LOG_LEVEL; keyword overrides that are not None win.

        Returns:
            Settings: The resolved configuration.
        """
        try:
            threads = int(os.environ.get("WLTOOL_THREADS", cls.threads))
        except ValueError as err:
            raise ValueError(f"WLTOOL_THREADS must be an integer: {err}") from err
        settings = {"threads": threads, "log_level": os.environ.get("WLTOOL_LOG_LEVEL", cls.log_level).upper()}
        settings.update({key: value for key, value in overrides.items() if value is not None})
        if settings["threads"] < 1:
            raise ValueError("threads must be >= 1")
        return cls(**settings)

    def to_dict(self) -> dict:
        return asdict(self)


def configure_logging(level: str = "WARNING") -> None:
    """Installs a single stderr handler on the root logger."""
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, force=True)


def v_space(n: int, col=None) -> None:
    """
    Prints empty strings to create vertical space in the Streamlit app.

    Args:
        n (int): An integer representing the number of empty lines to print.
        col: A streamlit column can be passed to add vertical space there.

    Returns:
        None
    """
    for _ in range(n):
        if col:
            col.write("#")
        else:
            st.write("#")


def show_table(df: pd.DataFrame, download_name: str = "") -> pd.DataFrame:
    """
    Displays a pandas dataframe using Streamlit's `dataframe` function and
    provides a CSV download button for the same table.

    Args:
        df (pd.DataFrame): The pandas dataframe to display.
        download_name (str): The name to give to the downloaded file. Defaults to empty string.

    Returns:
        df (pd.DataFrame): The displayed dataframe.
    """
    st.dataframe(df, use_container_width=True)
    if download_name:
        st.download_button(
            "Download Table",
            df.to_csv(index=False).encode("utf-8"),
            download_name.replace(" ", "-") + ".csv",
        )
    return df


def reset_directory(path: Path) -> None:
    """
    Remove the given directory and re-create it.

    Args:
        path (Path): Path to the directory to be reset.

    Returns:
        None
    """
    path = Path(path)
    if path.exists():
        shutil.rmtree(path)
    path.mkdir(parents=True, exist_ok=True)
