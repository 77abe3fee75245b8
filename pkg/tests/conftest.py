import numpy as np
import pytest

from coopsum.autoencoder import ToyAutoencoder
from oracles import rouge_n_oracle

WORDS = [f"w{i}" for i in range(14)]


def orthogonal_model(vocab, kappa=1.0, **kw):
    """Toy autoencoder whose embeddings are the standard basis."""
    return ToyAutoencoder(tuple(vocab), np.eye(len(vocab)), kappa=kappa, **kw)


def random_instance(rng, n_max=6, dim=12):
    """A small random entity: (reviews, zs, decoder)."""
    n = int(rng.integers(1, n_max + 1))
    model = ToyAutoencoder.build(WORDS, dim=dim, seed=int(rng.integers(1 << 31)), kappa=1.5, max_len=12)
    reviews = [list(rng.choice(WORDS, size=int(rng.integers(2, 9)))) for _ in range(n)]
    zs = np.stack([model.encode(r) for r in reviews])
    return reviews, zs, model


def overlap_oracle(reviews):
    """Objective built from the raw scorer, bypassing the Objective class."""
    return lambda summary: sum(rouge_n_oracle(summary, r, 1)[2] for r in reviews) / len(reviews)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
