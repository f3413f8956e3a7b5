"""Grammar-based differential testing of text classifiers.

Sentences are drawn from a context-free grammar, fed to two classifiers,
and flagged as error-inducing when the label sets overlap too little.
Directed search perturbs one leaf at a time and stays in error-dense
neighbourhoods.
"""
from .classifiers import (
    ModelClassifier,
    NaiveBayesModel,
    PerceptronModel,
    load_model,
    predict,
    retrain_with_errors,
    save_model,
    train_nb,
    train_perceptron,
)
from .derivation import (
    CannotPerturb,
    DerivationTree,
    Sentence,
    conforms,
    format_tree,
    generate,
    perturb,
    similar,
    yield_sentence,
)
from .grammar import Grammar, GrammarError, load_grammar, parse_grammar, terminal_alternatives
from .httpclient import HttpClassifier
from .oracle import (
    Classifier,
    ClassifierError,
    Differential,
    MalformedResponse,
    ScoredOutput,
    TransportError,
    bucket_sentiment,
    evaluate,
    jaccard,
    query,
)
from .retrain import MurqConfig, RetrainReport, run_murq
from .search import (
    CampaignConfig,
    CampaignReport,
    IterationRecord,
    ProbeExhausted,
    derive_seed,
    directed_search,
    find_initial,
    improvement,
    no_backtrack_search,
    random_search,
    run_campaign,
)

__version__ = "0.1.0"
