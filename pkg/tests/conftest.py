import pathlib

import pytest

from uslmc import model, parser

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS


@pytest.fixture(scope="session")
def m1():
    return model.load_model(CORPUS / "m1.model")


@pytest.fixture(scope="session")
def m2():
    return model.load_model(CORPUS / "m2.model")


def load_corpus_formula(name):
    dialect = "sl" if name.endswith(".sl") else "usl"
    return parser.load_formula(CORPUS / name, dialect)


@pytest.fixture(scope="session")
def psi(request):
    return load_corpus_formula
