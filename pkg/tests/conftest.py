import pytest

from alpool.engine import prepare_corpus
from alpool.synthgen import SynthSpec, generate

SMALL_SPEC = SynthSpec(n_docs=200, n_labels=4, vocab_size=300, tokens_per_doc=30, rng_seed=5)
TINY_MODELS = {
    "logistic_regression": {},
    "random_forest": {"n_estimators": 3},
    "feedforward_nn": {"hidden_layer_sizes": (16,), "epochs": 3},
}


@pytest.fixture(scope="session")
def small_corpus():
    docs, _ = generate(SMALL_SPEC)
    return prepare_corpus(docs, top_k=4)


@pytest.fixture(scope="session")
def default_corpus():
    docs, _ = generate(SynthSpec())
    return prepare_corpus(docs)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_RESULTS

    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"CRITERION {number}: {status}  {detail}")
