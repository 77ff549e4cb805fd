import numpy as np
import pytest

from inquest.schema import (
    Attribute,
    Schema,
    WorldModel,
    demo_gen_config,
    demo_schema,
    estimate_prior,
    generate_corpus,
)

GROUP_CYCLE = ("layout", "color", "components", "connections", "other")


def make_schema(domain_sizes, name="test"):
    """Schema with synthetic attribute ids a0, a1, ... and values v0, v1, ..."""
    attributes = tuple(
        Attribute(
            id=f"a{i}",
            label=f"attribute {i}",
            domain=tuple(f"v{j}" for j in range(size)),
            group=GROUP_CYCLE[i % len(GROUP_CYCLE)],
        )
        for i, size in enumerate(domain_sizes)
    )
    return Schema(name=name, version="1", attributes=attributes)


def make_world_model(schema, vectors, alpha=0.0):
    """World model with explicit probability vectors in domain order."""
    tables = {
        attr.id: {v: vectors[attr.id][j] for j, v in enumerate(attr.domain)}
        for attr in schema.attributes
    }
    return WorldModel(
        schema=schema, tables=tables, smoothing_alpha=alpha, corpus_size=1
    )


def uniform_world_model(domain_sizes):
    schema = make_schema(domain_sizes)
    vectors = {
        attr.id: [1.0 / len(attr.domain)] * len(attr.domain)
        for attr in schema.attributes
    }
    return make_world_model(schema, vectors)


def random_descending_world_model(rng, n_attrs=None, sizes=(3, 4, 5, 6), corpus_n=400):
    """Empirical world model from a descending-weight corpus.

    The descending-integer weight family keeps every attribute's prior
    entropy above 1 bit, which (with coarseness-2 subset evidence) keeps
    realized rewards nonnegative.
    """
    if n_attrs is None:
        n_attrs = int(rng.integers(3, 7))
    domain_sizes = [int(rng.choice(sizes)) for _ in range(n_attrs)]
    schema = make_schema(domain_sizes, name=f"rand-{n_attrs}")
    gen_config = {
        attr.id: [float(len(attr.domain) - j) for j in range(len(attr.domain))]
        for attr in schema.attributes
    }
    corpus = generate_corpus(schema, gen_config, corpus_n, int(rng.integers(0, 2**31)))
    return estimate_prior(schema, corpus, smoothing_alpha=1.0)


def random_belief_vectors(rng, schema):
    """Random strictly-positive distributions for each attribute."""
    vectors = {}
    for attr in schema.attributes:
        raw = rng.dirichlet(np.ones(len(attr.domain)))
        raw = np.clip(raw, 1e-6, None)
        raw = raw / raw.sum()
        vectors[attr.id] = [float(x) for x in raw]
    return vectors


def sample_truth(rng, belief):
    """Ground truth drawn from the belief's own distributions."""
    truth = {}
    for attr in belief.schema.attributes:
        vec = np.asarray(belief.distributions[attr.id])
        truth[attr.id] = attr.domain[int(rng.choice(len(vec), p=vec / vec.sum()))]
    return truth


def oracle_style_evidence(rng, schema, belief, truth):
    """Evidence as the shipped oracles produce it: truthful singletons and
    coarseness-2 subsets drawn from the full domain."""
    from inquest.belief import Evidence

    n_targets = int(rng.integers(1, min(3, len(schema.attributes)) + 1))
    picked = rng.choice(len(schema.attributes), size=n_targets, replace=False)
    constraints = {}
    for idx in sorted(int(i) for i in picked):
        attr = schema.attributes[idx]
        true_value = truth[attr.id]
        if len(attr.domain) > 2 and rng.random() < 0.5:
            others = [v for v in attr.domain if v != true_value]
            pick = others[int(rng.integers(0, len(others)))]
            constraints[attr.id] = tuple(
                v for v in attr.domain if v in (true_value, pick)
            )
        else:
            constraints[attr.id] = (true_value,)
    return Evidence(constraints=constraints)


@pytest.fixture(scope="session")
def demo():
    schema = demo_schema()
    corpus = generate_corpus(schema, demo_gen_config(schema), 800, seed=7)
    world_model = estimate_prior(schema, corpus, smoothing_alpha=1.0)
    return schema, corpus, world_model
