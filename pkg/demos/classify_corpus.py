"""Classify every bundled example both ways and print one record per example.

    python3 demos/classify_corpus.py [--quick]
"""
import sys

from freeword.suite import paper_suite

quick = "--quick" in sys.argv
report = paper_suite(quick=quick, workers=4)
print(report.text(), end="")
