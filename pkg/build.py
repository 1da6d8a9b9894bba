import os
import shutil
import subprocess
import sys
from pathlib import Path


MAX_ONEFILE_SIZE = 120 * 1024 * 1024
MAX_ONEDIR_SIZE = 250 * 1024 * 1024
NAME = "lowthrust"
ENTRY = "lowthrust/main.py"
MISSIONS = f"lowthrust/missions{os.pathsep}lowthrust/missions"


def run_pyinstaller(args: list[str]) -> None:
    result = subprocess.run(args, check=False)
    if result.returncode != 0:
        raise SystemExit(result.returncode)


def file_size(path: Path) -> int:
    return path.stat().st_size


def dir_size(path: Path) -> int:
    total = 0
    for root, _, files in os.walk(path):
        for name in files:
            total += Path(root, name).stat().st_size
    return total


def pyinstaller_cmd(mode: str) -> list[str]:
    return [
        "pyinstaller",
        "--console",
        mode,
        "--name",
        NAME,
        "--add-data",
        MISSIONS,
        ENTRY,
    ]


def main() -> None:
    dist = Path("dist")
    if dist.exists():
        shutil.rmtree(dist)

    run_pyinstaller(pyinstaller_cmd("--onefile"))

    exe_path = next((p for p in (dist / NAME, dist / f"{NAME}.exe") if p.is_file()), None)
    if exe_path is not None:
        size = file_size(exe_path)
        print(f"单文件体积: {size}")
        if size <= MAX_ONEFILE_SIZE:
            print("单文件打包成功")
            return

    run_pyinstaller(pyinstaller_cmd("--onedir"))

    dir_path = dist / NAME
    if dir_path.is_dir():
        size = dir_size(dir_path)
        print(f"目录体积: {size}")
        if size <= MAX_ONEDIR_SIZE:
            print("目录打包成功")
            return

    print("打包完成，但体积超出目标")
    sys.exit(1)


if __name__ == "__main__":
    main()
