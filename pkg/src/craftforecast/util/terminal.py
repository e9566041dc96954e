styles_map = {"plain": "0", "bright": "1", "redbg": "41", "greenbg": "42"}

ansi_esc = "\x1b"


def fmt(*styles: str) -> str:
    return f"{ansi_esc}[{''.join(styles_map[style] for style in styles)}m"


def bold(text: str) -> str:
    return f"{fmt('bright')}{text}{fmt('plain')}"


def status_box(ok: bool) -> str:
    color = "green" if ok else "red"
    return f"{fmt(f'{color}bg')}  {fmt('plain')}"


def format_table(header: list[str], rows: list[list[object]]) -> str:
    """
    Left-aligned plain text table, floats with 4 decimals, used for ablation summaries on the console.
    """

    def cell(value: object) -> str:
        if isinstance(value, float):
            return f"{value:.4f}"
        if value is None:
            return "-"
        return str(value)

    cells = [header] + [[cell(value) for value in row] for row in rows]
    widths = [max(len(row[col]) for row in cells) for col in range(len(header))]
    lines = ["  ".join(text.ljust(width) for text, width in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines)
