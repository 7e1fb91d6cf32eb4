import pytest

from carriertag.corpus import parse_corpus
from carriertag.synth import GenConfig, generate_synthetic

# Canonical on-disk form (what write_corpus produces), so the round-trip test
# can compare bytes.  Two narrators, three sentences each; the carrier-free
# sentences are n1/s1 and n2/s0.
TINY_CORPUS = """#annotators=4
n1\talice\t0\t0\tIch\tich\tPRON\tO\tO\tO\tO
n1\talice\t0\t1\thabe\thaben\tVERB\tO\tO\tO\tO
n1\talice\t0\t2\teine\teine\tDET\tO\tO\tO\tO
n1\talice\t0\t3\tFamilie\tfamilie\tNOUN\tI\tI\tI\tO
n1\talice\t1\t4\tEs\tes\tPRON\tO\tO\tO\tO
n1\talice\t1\t5\twar\tsein\tVERB\tO\tO\tO\tO
n1\talice\t1\t6\tgut\tgut\tADJ\tO\tO\tO\tO
n1\talice\t2\t7\tDas\tdas\tPRON\tO\tO\tO\tO
n1\talice\t2\t8\tfreut\tfreuen\tVERB\tI\tO\tO\tO
n1\talice\t2\t9\tmich\tich\tPRON\tO\tO\tO\tO
n1\talice\t2\t10\t.\t.\tPUNCT\tO\tO\tO\tO

n2\tbob\t0\t0\tDer\tder\tDET\tO\tO\tO\tO
n2\tbob\t0\t1\tDrucker\tdrucker\tNOUN\tO\tO\tO\tO
n2\tbob\t0\t2\tpiept\tpiepen\tVERB\tO\tO\tO\tO
n2\tbob\t1\t3\tmein\tmein\tDET\tO\tO\tO\tO
n2\tbob\t1\t4\tChef\tchef\tNOUN\tO\tI\tO\tO
n2\tbob\t1\t5\tnervt\tnerven\tVERB\tO\tI\tI\tO
n2\tbob\t1\t6\tmich\tich\tPRON\tO\tO\tO\tO
n2\tbob\t2\t7\tEnde\tende\tNOUN\tO\tO\tO\tO
n2\tbob\t2\t8\tgut\tgut\tADJ\tI\tO\tO\tO
n2\tbob\t2\t9\t.\t.\tPUNCT\tO\tO\tO\tO
"""


@pytest.fixture()
def tiny_corpus_path(tmp_path):
    path = tmp_path / "corpus.tsv"
    path.write_text(TINY_CORPUS, encoding="utf-8")
    return path


@pytest.fixture()
def tiny_narratives(tiny_corpus_path):
    return parse_corpus(tiny_corpus_path)


@pytest.fixture(scope="session")
def synth_small():
    """A few hundred tokens; enough signal for smoke-level training tests."""
    return generate_synthetic(
        GenConfig(narrators=6, sentences_per_narrative_mean=6.0, sentence_length_mean=12.0),
        seed=3,
    )


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance check at the end of the run."""
    lines = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            if getattr(report, "when", "call") != "call":
                continue
            if "test_acceptance" in report.nodeid:
                name = report.nodeid.split("::")[-1]
                lines.append((name, "PASS" if status == "passed" else "FAIL"))
    if lines:
        terminalreporter.write_sep("-", "acceptance checks")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {name}")
