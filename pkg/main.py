"""
Query evolution engine - command line entry point

Commands:
    run      evolve a query population from a keyword pool
    resume   continue an interrupted run from its state file
    inspect  print the report of a saved run
    search   run one query against an engine
    lemma    show how a text is lemmatized
    serve    start the mock HTTP engine over a local corpus

Exit codes: 0 ok, 1 invalid arguments or unreadable input, 2 invalid
configuration, 3 run ended with an error, 4 nothing to resume.
"""
import sys
import time
import logging
import argparse
from typing import Dict, List, Optional

from config import Config, EngineKind, NormalizerKind, default_config, load_config, settings, with_overrides
from exceptions import ConfigError, EngineError, LexiconError, StateError
from lexicon import Lexicon, load_keyword_pool, load_lexicon_dir
from models import StopReason, TERMINAL_REASONS
from report import build_report, render_report
from search import LocalEngine, SearchEngine, execute, index_corpus
from search_adapter import HttpAdapterEngine
import evolve
import persistence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUN_ERROR = 3
EXIT_NOTHING_TO_DO = 4

DEFAULT_STATE_PATH = "run" + persistence.STATE_SUFFIX


class CliParser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fail(message: str, code: int = EXIT_USAGE) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def load_lexicon_for(dict_dir: Optional[str], normalizer: NormalizerKind = NormalizerKind.RULES) -> Lexicon:
    return load_lexicon_dir(dict_dir or settings.DICT_DIR, normalizer.value)


def build_engine(config: Config, lexicon: Lexicon) -> SearchEngine:
    """
    Engine selected by g1

    Raises:
        ValueError when the engine source is missing or unusable
    """
    if config.engine_kind == EngineKind.HTTP_ADAPTER:
        if not config.adapter_url:
            raise ValueError("HttpAdapter engine needs --adapter-url")
        return HttpAdapterEngine(config.adapter_url)
    if not config.corpus_dir:
        raise ValueError("Local engine needs --corpus")
    return LocalEngine(index_corpus(config.corpus_dir, lexicon), lexicon)


def parse_assignments(pairs: List[str]) -> Dict[str, str]:
    values = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"expected KEY=VALUE, got '{pair}'")
        values[key.strip()] = value.strip()
    return values


def emit_report(state, args, duration: Optional[float] = None) -> None:
    report = build_report(state, top=args.top, duration=duration)
    if args.json:
        print(report.model_dump_json(indent=2))
    else:
        print(render_report(report))


def cmd_run(args) -> int:
    """Run the evolution loop from a config file and a keyword pool"""
    if args.corpus and args.adapter_url:
        return fail("give either --corpus or --adapter-url, not both")

    try:
        config = load_config(args.config) if args.config else default_config()
    except FileNotFoundError as e:
        return fail(str(e))
    except ConfigError as e:
        return fail(str(e), EXIT_CONFIG)

    try:
        overrides: Dict[str, object] = parse_assignments(args.set)
    except ValueError as e:
        return fail(str(e))
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.pool:
        overrides["keyword_pool_path"] = args.pool
    if args.corpus:
        overrides.update(corpus_dir=args.corpus, engine_kind=EngineKind.LOCAL)
    if args.adapter_url:
        overrides.update(adapter_url=args.adapter_url, engine_kind=EngineKind.HTTP_ADAPTER)
    if args.dict_dir:
        overrides["dict_dir"] = args.dict_dir
    if args.state_out:
        overrides["state_path"] = args.state_out
    try:
        config = with_overrides(config, overrides)
    except ConfigError as e:
        return fail(str(e), EXIT_CONFIG)

    if not config.keyword_pool_path:
        return fail("no keyword pool given (--pool or g4)")
    try:
        lexicon = load_lexicon_for(config.dict_dir, config.normalizer)
        pool = load_keyword_pool(config.keyword_pool_path, lexicon)
        engine = build_engine(config, lexicon)
    except (FileNotFoundError, LexiconError, ValueError) as e:
        return fail(str(e))

    print(f"🚀 Evolving {config.population_size} queries (seed {config.rng_seed})", file=sys.stderr)
    started = time.monotonic()
    state = evolve.run(config, lexicon, engine, pool)
    duration = time.monotonic() - started

    state_path = config.state_path or DEFAULT_STATE_PATH
    try:
        persistence.save_state(state, state_path)
    except StateError as e:
        emit_report(state, args, duration)
        return fail(str(e))

    emit_report(state, args, duration)
    return EXIT_RUN_ERROR if state.stop_reason == StopReason.ERROR else EXIT_OK


def cmd_resume(args) -> int:
    """Continue a saved Running or Error state"""
    try:
        state = persistence.load_state(args.state_path)
    except StateError as e:
        return fail(str(e))
    if state.stop_reason in TERMINAL_REASONS:
        print(f"Run already finished ({state.stop_reason.value}), nothing to resume", file=sys.stderr)
        return EXIT_NOTHING_TO_DO

    try:
        lexicon = load_lexicon_for(state.config.dict_dir, state.config.normalizer)
        engine = build_engine(state.config, lexicon)
    except (LexiconError, ValueError) as e:
        return fail(str(e))

    started = time.monotonic()
    state = evolve.resume(state, lexicon, engine)
    duration = time.monotonic() - started

    try:
        persistence.save_state(state, args.state_out or args.state_path)
    except StateError as e:
        emit_report(state, args, duration)
        return fail(str(e))

    emit_report(state, args, duration)
    return EXIT_RUN_ERROR if state.stop_reason == StopReason.ERROR else EXIT_OK


def cmd_inspect(args) -> int:
    """Print the report of a saved state without running anything"""
    try:
        state = persistence.load_state(args.state_path)
    except StateError as e:
        return fail(str(e))
    emit_report(state, args)
    return EXIT_OK


def _engine_from_flags(args, lexicon: Lexicon) -> SearchEngine:
    if bool(args.corpus) == bool(args.adapter_url):
        raise ValueError("give exactly one of --corpus or --adapter-url")
    if args.adapter_url:
        return HttpAdapterEngine(args.adapter_url)
    return LocalEngine(index_corpus(args.corpus, lexicon), lexicon)


def cmd_search(args) -> int:
    """Run a single query and print its hits"""
    if args.limit < 1:
        return fail("--limit must be ≥ 1")
    try:
        lexicon = load_lexicon_for(args.dict_dir, args.normalizer)
        engine = _engine_from_flags(args, lexicon)
        hits = execute(args.query_text, engine, args.limit)
    except (LexiconError, ValueError, EngineError) as e:
        return fail(str(e))

    if not hits:
        print("0 results")
        return EXIT_OK
    for hit in hits:
        score = f"{hit.score:.6f}" if hit.score is not None else "-"
        print(f"{hit.rank:>3}  {score:>9}  {hit.location}  {hit.title}")
    return EXIT_OK


def cmd_lemma(args) -> int:
    """Show the token -> lemma mapping of a text"""
    try:
        lexicon = load_lexicon_for(args.dict_dir, args.normalizer)
    except LexiconError as e:
        return fail(str(e))

    pairs = lexicon.analyze(args.text)
    for token, lemma in pairs:
        print(f"{token} -> {lemma if lemma is not None else '∅ (stopword)'}")
    if pairs:
        print("lemmas: " + " ".join(lemma for _, lemma in pairs if lemma is not None))
    return EXIT_OK


def cmd_serve(args) -> int:
    """Serve a local corpus over the HTTP adapter contract"""
    import mock_server

    try:
        lexicon = load_lexicon_for(args.dict_dir)
        index = index_corpus(args.corpus, lexicon)
    except (LexiconError, ValueError) as e:
        return fail(str(e))
    mock_server.serve(index, lexicon, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="gaf", description="Evolutionary search query optimization")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_report_flags(p):
        p.add_argument("--json", action="store_true", help="Print the report as JSON")
        p.add_argument("--top", type=int, default=10, help="Number of resources in the report")

    def add_normalizer_flag(p):
        p.add_argument(
            "--normalizer", type=NormalizerKind, choices=list(NormalizerKind), default=NormalizerKind.RULES,
            help="Token normalizer (Rules or Porter)",
        )

    def add_engine_flags(p):
        p.add_argument("--corpus", help="Local corpus directory")
        p.add_argument("--adapter-url", dest="adapter_url", help="HTTP adapter base URL")
        p.add_argument("--dict-dir", dest="dict_dir", help="Dictionary directory")

    run = commands.add_parser("run", help="Run an evolution")
    run.add_argument("--config", help="Config file (key = value)")
    run.add_argument("--pool", help="Keyword pool file")
    add_engine_flags(run)
    run.add_argument("--seed", type=int, help="Override rng_seed")
    run.add_argument("--state-out", dest="state_out", help="State file written at the end")
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override any config key")
    add_report_flags(run)
    run.set_defaults(handler=cmd_run)

    resume = commands.add_parser("resume", help="Resume a saved run")
    resume.add_argument("state_path")
    resume.add_argument("--state-out", dest="state_out", help="Write the final state here instead")
    add_report_flags(resume)
    resume.set_defaults(handler=cmd_resume)

    inspect = commands.add_parser("inspect", help="Show a saved run")
    inspect.add_argument("state_path")
    add_report_flags(inspect)
    inspect.set_defaults(handler=cmd_inspect)

    search = commands.add_parser("search", help="Run one query")
    search.add_argument("query_text")
    add_engine_flags(search)
    search.add_argument("--limit", type=int, default=10, help="Maximum number of hits")
    add_normalizer_flag(search)
    search.set_defaults(handler=cmd_search)

    lemma = commands.add_parser("lemma", help="Lemmatize a text")
    lemma.add_argument("text")
    lemma.add_argument("--dict-dir", dest="dict_dir", help="Dictionary directory")
    add_normalizer_flag(lemma)
    lemma.set_defaults(handler=cmd_lemma)

    serve = commands.add_parser("serve", help="Start the mock HTTP engine")
    serve.add_argument("--corpus", required=True, help="Local corpus directory")
    serve.add_argument("--dict-dir", dest="dict_dir", help="Dictionary directory")
    serve.add_argument("--host", default=settings.MOCK_HOST)
    serve.add_argument("--port", type=int, default=settings.MOCK_PORT)
    serve.set_defaults(handler=cmd_serve)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
