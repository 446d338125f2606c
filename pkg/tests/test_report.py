import json
from fractions import Fraction

from walshlab.core import table_from_anf, walsh_transform
from walshlab.construct import gb_construction_report
from walshlab.metrics import ExactValue, classify
from walshlab.report import (
    QUINTIC_MAX_ANF,
    QUINTIC_SEED_ANF,
    LedgerEntry,
    VerificationLedger,
    analytic_to_dict,
    metrics_from_json,
    metrics_to_csv,
    metrics_to_json,
    run_verification_suite,
    search_result_canonical,
    search_result_to_dict,
    spectrum_to_csv,
    value_from_json,
    value_to_json,
)
from walshlab.search import SearchJob, sweep

from conftest import random_table


def test_value_round_trip():
    for v in (
        ExactValue.from_fraction(Fraction(16, 7)),
        ExactValue.from_fraction(Fraction(-3)),
        ExactValue.from_float(2.2755555555555556),
        None,
    ):
        doc = json.loads(json.dumps(value_to_json(v)))
        assert value_from_json(doc) == v


def test_metrics_json_contains_exact_ratio():
    rep = classify(walsh_transform(table_from_anf(QUINTIC_MAX_ANF, 5)))
    doc = metrics_to_json(rep)
    assert '"mei_ratio": "16/7"' in doc
    assert '"influence": "7/4"' in doc


def test_metrics_json_parity_min_entropy():
    rep = classify(walsh_transform(table_from_anf("X1 + X2 + X3", 3)))
    assert json.loads(metrics_to_json(rep))["min_entropy"] == "0"


def test_metrics_round_trip_random(rng):
    for n in range(1, 7):
        for _ in range(170):
            rep = classify(walsh_transform(random_table(rng, n)))
            assert metrics_from_json(metrics_to_json(rep)) == rep


def test_metrics_csv_layout():
    rep = classify(walsh_transform(table_from_anf(QUINTIC_MAX_ANF, 5)))
    lines = metrics_to_csv(rep).strip().split("\n")
    assert len(lines) == 2
    header = lines[0].split(",")
    row = lines[1].split(",")
    assert header[0] == "n" and row[0] == "5"
    assert row[header.index("mei_ratio")] == "16/7"


def test_spectrum_csv_dictator():
    lines = spectrum_to_csv(walsh_transform(table_from_anf("X1", 1))).strip().split("\n")
    assert lines[0] == "alpha,weight,corr,corr_sq_over_total"
    assert lines[1] == "0,0,0,0/1"
    assert lines[2] == "1,1,2,1/1"
    assert lines[3] == "PARSEVAL,,4,1"


def test_spectrum_csv_quintic_witness():
    doc = spectrum_to_csv(walsh_transform(table_from_anf(QUINTIC_MAX_ANF, 5)))
    lines = doc.strip().split("\n")
    assert len(lines) == 1 + 32 + 1
    nonzero = [l for l in lines[1:-1] if not l.split(",")[3].startswith("0/")]
    assert len(nonzero) == 16
    assert lines[-1].startswith("PARSEVAL,,1024,")


def test_analytic_dict_provenance():
    doc = analytic_to_dict(gb_construction_report(table_from_anf(QUINTIC_SEED_ANF, 5), 0))
    assert doc["mei_ratio"] == "128/45"
    assert doc["provenance"]["min_entropy"] == "composition-min-entropy"
    assert doc["details"]["epsilon_b"] == "3/8"
    json.dumps(doc)


def test_search_result_serialisation():
    r = sweep(SearchJob("general", 2, metric="mei"), threads=1)
    doc = search_result_to_dict(r)
    assert doc["best_ratio"] == "2"
    assert doc["job"]["family"] == "general"
    json.dumps(doc)
    canon = search_result_canonical(r)
    assert "elapsed" not in canon and "resumed_chunks" not in canon


# --- verification suite -----------------------------------------------------------


FAST_SUBSET = [
    "c01-quintic-max-min-entropy",
    "c02-quintic-max-influence",
    "c03-quintic-max-ratio",
    "c04-quintic-seed-min-entropy",
    "c05-quintic-seed-influence",
    "c06-iterated-step1-ratio",
    "c07-seed-odd-weight-mass",
    "c08-thirty-var-ratio",
    "c09-thirty-var-min-entropy",
    "c17-parseval",
]


def test_suite_subset_passes():
    ledger = run_verification_suite(scope="fast", claim_ids=FAST_SUBSET)
    assert [e.claim_id for e in ledger.entries] == FAST_SUBSET
    assert all(e.status == "pass" for e in ledger.entries)
    assert ledger.passed and ledger.exit_code() == 0
    for e in ledger.entries:
        assert e.tag in ("published", "derived", "trivial")
        assert e.expected and e.computed


def test_suite_is_idempotent():
    a = run_verification_suite(scope="fast", claim_ids=FAST_SUBSET[:3])
    b = run_verification_suite(scope="fast", claim_ids=FAST_SUBSET[:3])
    strip = lambda lg: [(e.claim_id, e.status, e.expected, e.computed) for e in lg.entries]
    assert strip(a) == strip(b)


def test_suite_skips_long_claims_in_fast_scope():
    ledger = run_verification_suite(scope="fast", claim_ids=["c24-general-n5-max"])
    assert len(ledger.entries) == 1
    assert ledger.entries[0].status == "skipped"
    assert ledger.passed  # skipped entries do not fail the suite


def test_suite_empty_scope():
    ledger = run_verification_suite(scope="fast", claim_ids=[])
    assert ledger.entries == ()
    assert ledger.exit_code() == 0


def test_suite_records_failures_as_entries():
    failing = VerificationLedger(
        (LedgerEntry("c00", "trivial", "demo", "1", "2", "fail", 0.0),)
    )
    assert failing.exit_code() == 1
    assert not failing.passed
    doc = failing.to_dict()
    assert doc["entries"][0]["status"] == "fail"


def test_ledger_json_shape():
    ledger = run_verification_suite(scope="fast", claim_ids=["c17-parseval"])
    doc = json.loads(ledger.to_json())
    assert doc["schema_version"] == 1
    entry = doc["entries"][0]
    assert set(entry) == {
        "claim_id", "tag", "description", "expected", "computed", "status", "runtime",
    }
