"""
Helpers shared by the command modules.
"""

import argparse
import logging
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from urban_growth.core.config import settings
from urban_growth.core.project import ProjectConfig, load_project

logger = logging.getLogger(__name__)


def add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", type=Path, help="project INI file")
    parser.add_argument("--seed", type=int, default=None, help="base seed (default: config, then URBAN_GROWTH_SEED)")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes; never changes results")
    parser.add_argument("--out", type=Path, default=None, help="output directory (default: config [output])")


def load(args: argparse.Namespace) -> ProjectConfig:
    return load_project(args.config)


def seed_of(args: argparse.Namespace, config: ProjectConfig) -> int:
    return config.engine.seed if args.seed is None else args.seed


def jobs_of(args: argparse.Namespace) -> int:
    return max(1, settings.JOBS if args.jobs is None else args.jobs)


def out_dir(args: argparse.Namespace, config: ProjectConfig) -> Path:
    return args.out if args.out is not None else config.output.directory


class OutputSet:
    """Files written by one command, staged beside the output directory.

    Nothing under ``root`` changes until ``commit()``; each top-level entry
    written replaces its namesake there, every other entry is left alone.
    """

    def __init__(self, root: Path):
        self.root = root
        root.parent.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=f".{root.name}.", suffix=".partial", dir=root.parent))

    def path(self, *parts: str) -> Path:
        target = self.staging.joinpath(*parts)
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def write_text(self, text: str, *parts: str) -> Path:
        target = self.path(*parts)
        target.write_text(text, encoding="utf-8", newline="\n")
        return target

    def commit(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        for entry in sorted(self.staging.iterdir()):
            destination = self.root / entry.name
            if destination.is_dir():
                shutil.rmtree(destination)
            elif destination.exists():
                destination.unlink()
            entry.replace(destination)
        self.staging.rmdir()

    def discard(self) -> None:
        shutil.rmtree(self.staging, ignore_errors=True)
        logger.warning(f"Discarded partial output for {self.root}")


@contextmanager
def transactional_output(root: Path) -> Iterator[OutputSet]:
    """Publish everything written in the block under ``root`` only if it completes."""
    outputs = OutputSet(root)
    try:
        yield outputs
    except BaseException:
        outputs.discard()
        raise
    outputs.commit()
