#!/usr/bin/env python3
"""Fetch the source PDFs for a QASPER split from arXiv.

Paper keys in the QASPER JSON are arXiv identifiers; this downloads each
PDF into the output directory (skipping ones already present) with a polite
delay between requests. Network-only helper; nothing in the package depends
on it.

Usage:
    python scripts/fetch_arxiv_pdfs.py qasper-dev-v0.3.json pdfs/ [--delay 3.0]
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import requests

ARXIV_PDF_URL = "https://arxiv.org/pdf/{arxiv_id}"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("qasper_json", type=Path)
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--delay", type=float, default=3.0,
                        help="Seconds between requests (be nice to arXiv).")
    args = parser.parse_args()

    with open(args.qasper_json, encoding="utf-8") as f:
        paper_ids = sorted(json.load(f))
    args.out_dir.mkdir(parents=True, exist_ok=True)

    fetched = skipped = failed = 0
    for arxiv_id in paper_ids:
        target = args.out_dir / f"{arxiv_id}.pdf"
        if target.exists():
            skipped += 1
            continue
        url = ARXIV_PDF_URL.format(arxiv_id=arxiv_id)
        try:
            resp = requests.get(url, timeout=60)
            resp.raise_for_status()
        except requests.RequestException as exc:
            print(f"FAILED {arxiv_id}: {exc}", file=sys.stderr)
            failed += 1
            continue
        target.write_bytes(resp.content)
        fetched += 1
        print(f"fetched {arxiv_id} ({len(resp.content) // 1024} KiB)")
        time.sleep(args.delay)

    print(f"done: {fetched} fetched, {skipped} already present, {failed} failed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
