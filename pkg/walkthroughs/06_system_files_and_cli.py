"""Walkthrough 6: writing a system to YAML and driving it through the command line.

Run: python walkthroughs/06_system_files_and_cli.py
"""
import tempfile
from pathlib import Path

from diagah.cli import main
from diagah.demos import goodearl
from diagah.sysfile import dump_system, parse_system

text = dump_system(goodearl(3))
print(text[:400], "...\n")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "g3.yaml"
    path.write_text(text)
    again = parse_system(path)
    print("round trip keeps sizes:", [s.size for st in again.stages for s in st])

    for argv in (["validate", "--input", str(path)],
                 ["simplicity", "--input", str(path), "--center", "0.5", "--radius", "0.3", "--horizon", "3"],
                 ["invert-approx", "--input", str(path), "--stage", "1", "--element", "shift:0.5",
                  "--eps", "0.1", "--horizon", "3"],
                 ["property-p", "--demo", "identity", "--eps", "0.3", "--x0", "0.5", "--horizon", "4"]):
        print("\n$ diagah", " ".join(argv))
        code = main(argv)
        print(f"[exit {code}]")
