import numpy as np
import pytest

from topicflow.corpus import Document


def random_docs(seed: int, n_docs: int, n_tokens: int, vocab_size: int):
    """Random encoded documents for sampler tests."""
    gen = np.random.default_rng(seed)
    return [Document(id=f"d{j}", year=2000, tokens=[],
                     encoded=gen.integers(0, vocab_size,
                                          size=n_tokens).astype(np.int32))
            for j in range(n_docs)]


@pytest.fixture
def tiny_docs():
    return random_docs(7, 6, 20, 10)
