import random

import pytest

from schedwidth.harness import GeneratorSpec, default_corpus, generate


@pytest.fixture(scope="session")
def tiny_corpus():
    return default_corpus(100)


def restricted_corpus(count, n_max=6, m_max=3, classes=("nested", "path_hierarchical", "tree_hierarchical"),
                      seed0=0, sizes=None):
    out = []
    for k in range(count):
        rng = random.Random(seed0 + k)
        cls = classes[k % len(classes)]
        spec = GeneratorSpec(cls, rng.randint(1, n_max), rng.randint(1, m_max), seed=seed0 + k, sizes=sizes)
        out.append((f"{cls}-{seed0 + k}", generate(spec)))
    return out
