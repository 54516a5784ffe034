"""
Gnuplot script emission for BER data files. The script is generated, never run.
"""
from pathlib import Path
from typing import List, Tuple, Union


def read_header(path: Path) -> Tuple[str, List[str], int]:
    """Title, column names and column count of a data file."""
    title, columns, width = "", [], 0
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.startswith("columns:"):
                    columns = body[len("columns:"):].split()
                elif not body.startswith("config-hash:") and not title:
                    title = body
                continue
            width = len(line.split())
            break
    if not columns:
        columns = ["ebn0_db"] + [f"column {i}" for i in range(2, width + 1)]
    return title, columns, max(width, len(columns))


def _quoted(text: str) -> str:
    """Gnuplot single-quoted string; a quote inside is doubled."""
    return "'" + text.replace("'", "''") + "'"


def emit_plot_script(data_file: Union[str, Path]) -> str:
    """
    Log-y BER over Eb/N0, one curve per BER column.

    Raises:
        FileNotFoundError: if the data file does not exist
    """
    path = Path(data_file)
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    title, columns, width = read_header(path)
    curves = columns[1:width]
    if not curves:
        raise ValueError(f"{path} has no BER columns")

    lines = [
        "set terminal pngcairo size 800,600",
        f"set output {_quoted(path.with_suffix('.png').name)}",
        f"set title {_quoted(title)}",
        "set xlabel '10 log10(Eb/N0) in dB'",
        "set ylabel 'BER'",
        "set logscale y",
        "set format y '10^{%L}'",
        "set grid",
        "set key bottom left",
    ]
    plots = []
    for i, name in enumerate(curves, start=2):
        source = _quoted(path.name) if i == 2 else "''"
        plots.append(f"{source} using 1:{i} with linespoints title {_quoted(name)}")
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
