"""PDF-to-characters via an external utility.

The core deliberately contains no PDF parser: callers either provide a char
dump (JSON lines of glyph boxes, page points, origin top-left) directly, or
name a command template that produces one. The template gets ``{pdf}`` and
``{out}`` substituted per argument, e.g.::

    docqa-pdf-chars {pdf} {out}

The bundled ``docqa-pdf-chars`` entry point implements the contract with
pdfminer.six (the ``pdf`` extra) and converts pdfminer's bottom-left page
coordinates to this package's top-left convention.
"""

from __future__ import annotations

import logging
import shlex
import subprocess
import sys
from pathlib import Path

from .extract import CharBox, load_char_dump, write_char_dump

logger = logging.getLogger(__name__)

DEFAULT_CHAR_COMMAND = "docqa-pdf-chars {pdf} {out}"


class ExtractionToolError(Exception):
    """The external char-dump utility failed or produced no output."""


def run_char_command(pdf_path: str | Path, out_path: str | Path, command: str) -> list[CharBox]:
    """Run the configured extraction utility and read its char dump."""
    pdf_path, out_path = Path(pdf_path), Path(out_path)
    if not pdf_path.is_file():
        raise ExtractionToolError(f"PDF not found: {pdf_path}")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    argv = [
        token.replace("{pdf}", str(pdf_path)).replace("{out}", str(out_path))
        for token in shlex.split(command)
    ]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=300)
    except FileNotFoundError as exc:
        raise ExtractionToolError(f"extraction utility not found: {argv[0]}") from exc
    except subprocess.TimeoutExpired as exc:
        raise ExtractionToolError(f"extraction utility timed out: {' '.join(argv)}") from exc
    if proc.returncode != 0:
        raise ExtractionToolError(
            f"extraction utility exited {proc.returncode}: {proc.stderr.strip()[:400]}"
        )
    if not out_path.is_file():
        raise ExtractionToolError(f"extraction utility produced no output at {out_path}")
    return load_char_dump(out_path)


def chars_main(argv: list[str] | None = None) -> int:
    """Console entry point: ``docqa-pdf-chars INPUT.pdf OUTPUT.jsonl``."""
    import argparse

    parser = argparse.ArgumentParser(
        prog="docqa-pdf-chars",
        description="Dump per-character boxes from a PDF as JSON lines.",
    )
    parser.add_argument("pdf", type=Path)
    parser.add_argument("out", type=Path)
    args = parser.parse_args(argv)

    try:
        from pdfminer.high_level import extract_pages
        from pdfminer.layout import LTChar, LTTextContainer, LTTextLine
    except ImportError:
        print(
            "docqa-pdf-chars requires pdfminer.six (install the 'pdf' extra: pip install docqa[pdf]),"
            " or point char_cmd at another utility implementing the contract.",
            file=sys.stderr,
        )
        return 2

    chars: list[CharBox] = []
    for page_index, page in enumerate(extract_pages(str(args.pdf))):
        page_height = page.height

        def walk(element):
            if isinstance(element, LTChar):
                if element.get_text().strip():
                    # pdfminer y grows upward; flip to top-left origin.
                    chars.append(
                        CharBox(
                            ch=element.get_text()[0],
                            x0=element.x0,
                            y0=page_height - element.y1,
                            x1=element.x1,
                            y1=page_height - element.y0,
                            page_index=page_index,
                            baseline_y=page_height - element.y0,
                        )
                    )
            elif isinstance(element, (LTTextContainer, LTTextLine)) or hasattr(element, "__iter__"):
                for child in element:
                    walk(child)

        for element in page:
            walk(element)

    write_char_dump(chars, args.out)
    print(f"wrote {len(chars)} characters to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(chars_main())
