"""Multi-command pipeline entry point.

Stages read a manifest, write a new artifact, and never mutate inputs.
Every stage run is journaled as (stage, config hash, input hash, output
hash); re-running a completed stage against identical inputs and config is
a no-op recorded as a skip.  Outputs land atomically (temp file + rename).

Configuration precedence: command-line flag > environment variable
(prefix ``VTCURATE``, e.g. ``VTCURATE_SEGMENT_CUT_THRESHOLD``) > config
file (INI, one section per stage) > built-in default.

Exit codes: 0 ok, 2 validation failure, 3 service failure, 4 config error.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import sys
from pathlib import Path

import click

from . import fileio, fixture
from .align.metrics import avg_top1_top5, recall_at_k, topk_accuracy
from .align.train import AlignTrainConfig, train_alignment
from .captioning import CanonicalSource, CaptionPlan, CaptionServices
from .errors import (ConfigConflict, InvalidRecord, MalformedLine,
                     MissingInput, PartialResult, ServiceError,
                     ValidationFailed, VtcurateError)
from .interleave import SequenceFormat
from .manifest import header_line, read_manifest, serialize_record
from .pipeline import (caption_stage, interleave_stage, sample_stage,
                       score_stage, segment_stage, stats_stage)
from .sampling import Strategy, SubsetSpec
from .seeding import split_seed
from .segmenter import SegmenterConfig
from .services import CaptionServiceSpec
from .stats import render_text_report


def _load_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except FileNotFoundError:
        raise ConfigConflict(f"config file not found: {path}") from None
    except configparser.Error as e:
        raise ConfigConflict(f"bad config file {path}: {e}") from None
    return {section: dict(parser.items(section))
            for section in parser.sections()}


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="INI file with one section per stage.")
@click.option("--journal", "journal_path", type=click.Path(), default=None,
              help="JSONL run ledger; enables no-op re-runs.")
@click.option("--seed", "top_seed", type=int, default=0, show_default=True,
              help="Top-level seed; stages without an explicit --seed "
                   "derive theirs from it.")
@click.pass_context
def cli(ctx, config_path, journal_path, top_seed):
    """Deterministic video-text corpus curation pipeline."""
    if config_path:
        ctx.default_map = _load_config_file(config_path)
    ctx.obj = {"journal": Path(journal_path) if journal_path else None,
               "top_seed": top_seed}


def _stage_seed(ctx, stage: str, explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    return split_seed(ctx.obj["top_seed"], stage)


# --- journaling ---------------------------------------------------------------

def _sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _hash_path(path: Path) -> str:
    if path.is_dir():
        h = hashlib.sha256()
        for child in sorted(p for p in path.rglob("*") if p.is_file()):
            h.update(child.name.encode())
            h.update(child.read_bytes())
        return h.hexdigest()
    return _sha256_bytes(path.read_bytes())


def _hash_inputs(paths: list[Path]) -> str:
    h = hashlib.sha256()
    for p in paths:
        if not p.exists():
            raise MissingInput(f"input not found: {p}")
        h.update(str(p.name).encode())
        h.update(_hash_path(p).encode())
    return h.hexdigest()


def _read_journal(path: Path) -> list[dict]:
    if path is None or not path.exists():
        return []
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def _append_journal(path: Path, entry: dict) -> None:
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(entry, ensure_ascii=False, separators=(",", ":")) + "\n")


def run_journaled(ctx, stage: str, inputs: list[Path], out: Path,
                  config: dict, produce) -> None:
    """Skip when the journal shows this exact (stage, config, inputs) run
    already produced the bytes sitting at ``out``; otherwise produce and
    atomically write, then journal the run."""
    journal = ctx.obj["journal"]
    config_hash = _sha256_bytes(
        json.dumps(config, sort_keys=True, default=str).encode())
    input_hash = _hash_inputs(inputs)
    for entry in _read_journal(journal):
        if (entry.get("stage") == stage
                and entry.get("config_hash") == config_hash
                and entry.get("input_hash") == input_hash
                and entry.get("output") == str(out)
                and entry.get("status") in ("ok", "skipped")
                and out.exists()
                and _hash_path(out) == entry.get("output_hash")):
            _append_journal(journal, {**entry, "status": "skipped"})
            click.echo(f"{stage}: up to date, skipped", err=True)
            return
    content = produce()
    fileio.atomic_write_text(out, content)
    _append_journal(journal, {
        "stage": stage, "config_hash": config_hash, "input_hash": input_hash,
        "output": str(out), "output_hash": _hash_path(out), "status": "ok",
    })


def _manifest_content(records) -> str:
    return header_line() + "\n" + \
        "".join(serialize_record(r) + "\n" for r in records)


# --- stages ---------------------------------------------------------------------

@cli.command(name="fixture")
@click.option("--out", required=True, type=click.Path())
@click.option("--videos", "n_videos", default=20, show_default=True)
@click.option("--seed", type=int, default=None)
@click.pass_context
def fixture_cmd(ctx, out, n_videos, seed):
    """Generate the bundled synthetic corpus fixture."""
    paths = fixture.generate_fixture(out, n_videos,
                                     _stage_seed(ctx, "fixture", seed))
    click.echo(json.dumps({k: str(v) for k, v in paths.items()}))


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--signatures", "sig_dir", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--cut-threshold", default=27.0, show_default=True)
@click.option("--min-scene-frames", default=15, show_default=True)
@click.option("--min-clip-s", default=2.0, show_default=True)
@click.option("--still-threshold", default=1.0, show_default=True)
@click.option("--extreme-threshold", default=80.0, show_default=True)
@click.option("--collection-gate/--no-collection-gate", default=False,
              help="Drop videos outside the duration/resolution bounds.")
@click.pass_context
def segment(ctx, manifest_path, sig_dir, out, cut_threshold, min_scene_frames,
            min_clip_s, still_threshold, extreme_threshold, collection_gate):
    """Detect scene cuts and emit kept clip records."""
    try:
        config = SegmenterConfig(cut_threshold, min_scene_frames, min_clip_s,
                                 still_threshold, extreme_threshold)
    except ValueError as e:
        raise ConfigConflict(str(e)) from None

    def produce():
        records = read_manifest(manifest_path)
        result = segment_stage(
            records,
            lambda vid: fileio.read_signatures(sig_dir, vid),
            config, collection_gate)
        return _manifest_content(result)

    run_journaled(ctx, "segment", [Path(manifest_path), Path(sig_dir)],
                  Path(out),
                  {"cut_threshold": cut_threshold,
                   "min_scene_frames": min_scene_frames,
                   "min_clip_s": min_clip_s,
                   "still_threshold": still_threshold,
                   "extreme_threshold": extreme_threshold,
                   "collection_gate": collection_gate},
                  produce)


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--fine-fps", default=1.0, show_default=True)
@click.option("--endpoint-fine", required=True)
@click.option("--endpoint-sum", required=True)
@click.option("--endpoint-coarse", required=True)
@click.option("--timeout-ms", default=10_000, show_default=True)
@click.option("--max-retries", default=3, show_default=True)
@click.option("--backoff-base-ms", default=200, show_default=True)
@click.option("--max-in-flight", default=8, show_default=True)
@click.option("--canonical-source", default="fine_summary", show_default=True,
              type=click.Choice([s.value for s in CanonicalSource]))
@click.option("--summarize-prompt-file", type=click.Path(), default=None,
              help="Override the shipped summarizer prompt template.")
@click.pass_context
def caption(ctx, manifest_path, out, fine_fps, endpoint_fine, endpoint_sum,
            endpoint_coarse, timeout_ms, max_retries, backoff_base_ms,
            max_in_flight, canonical_source, summarize_prompt_file):
    """Produce multiscale captions through the configured services."""

    def spec(endpoint):
        return CaptionServiceSpec(endpoint, timeout_ms, max_retries,
                                  backoff_base_ms, max_in_flight)

    if summarize_prompt_file:
        try:
            prompt = Path(summarize_prompt_file).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigConflict(f"cannot read prompt file: {e}") from None
    else:
        prompt = default_summarize_prompt()
    try:
        plan = CaptionPlan(fine_fps, CanonicalSource(canonical_source),
                           summarize_prompt=prompt)
    except ValueError as e:
        raise ConfigConflict(str(e)) from None

    def produce():
        services = CaptionServices.from_specs(
            spec(endpoint_fine), spec(endpoint_sum), spec(endpoint_coarse))
        return _manifest_content(
            caption_stage(read_manifest(manifest_path), services, plan))

    run_journaled(ctx, "caption", [Path(manifest_path)], Path(out),
                  {"fine_fps": fine_fps, "endpoint_fine": endpoint_fine,
                   "endpoint_sum": endpoint_sum,
                   "endpoint_coarse": endpoint_coarse,
                   "canonical_source": canonical_source},
                  produce)


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--features", "features_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.pass_context
def score(ctx, manifest_path, features_path, out):
    """Attach aesthetic and similarity scores from a feature sidecar."""

    def produce():
        return _manifest_content(
            score_stage(read_manifest(manifest_path),
                        fileio.read_features(features_path)))

    run_journaled(ctx, "score", [Path(manifest_path), Path(features_path)],
                  Path(out), {}, produce)


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--strategy", required=True,
              type=click.Choice([s.value for s in Strategy]))
@click.option("--n", "n_clips", required=True, type=int)
@click.option("--seed", type=int, default=None)
@click.option("--top-fraction", default=0.30, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.pass_context
def sample(ctx, manifest_path, strategy, n_clips, seed, top_fraction, out):
    """Build a training subset manifest."""
    seed = _stage_seed(ctx, "sample", seed)
    try:
        spec = SubsetSpec(Strategy(strategy), n_clips, seed, top_fraction)
    except ValueError as e:
        raise ConfigConflict(str(e)) from None

    def produce():
        return _manifest_content(
            sample_stage(read_manifest(manifest_path), spec))

    run_journaled(ctx, "sample", [Path(manifest_path)], Path(out),
                  {"strategy": strategy, "n": n_clips, "seed": seed,
                   "top_fraction": top_fraction},
                  produce)


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--format", "fmt", required=True,
              type=click.Choice([f.value for f in SequenceFormat]))
@click.option("--drop-prob", default=0.3, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@click.pass_context
def interleave(ctx, manifest_path, fmt, drop_prob, seed, out):
    """Emit interleaved video-text sequences, one per line."""
    seed = _stage_seed(ctx, "interleave", seed)

    def produce():
        lines = interleave_stage(read_manifest(manifest_path),
                                 SequenceFormat(fmt), drop_prob, seed)
        return "".join(line + "\n" for line in lines)

    run_journaled(ctx, "interleave", [Path(manifest_path)], Path(out),
                  {"format": fmt, "drop_prob": drop_prob, "seed": seed},
                  produce)


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.pass_context
def stats(ctx, manifest_path, out):
    """Corpus statistics report (.json or .txt by extension)."""

    def produce():
        report = stats_stage(read_manifest(manifest_path))
        if str(out).endswith(".txt"):
            return render_text_report(report)
        return json.dumps(report, ensure_ascii=False, indent=2) + "\n"

    run_journaled(ctx, "stats", [Path(manifest_path)], Path(out), {}, produce)


@cli.command(name="align-train")
@click.option("--pairs", "pairs_path", required=True, type=click.Path())
@click.option("--steps", required=True, type=int)
@click.option("--lr", default=4e-6, show_default=True)
@click.option("--mask-ratio", default=0.0, show_default=True)
@click.option("--tail-fraction", default=0.0, show_default=True,
              help="Final fraction of steps run unmasked.")
@click.option("--seed", type=int, default=None)
@click.option("--proj-dim", default=1024, show_default=True)
@click.option("--out", type=click.Path(), default=None,
              help="Write the loss curve and parameters as JSON.")
@click.pass_context
def align_train(ctx, pairs_path, steps, lr, mask_ratio, tail_fraction, seed,
                proj_dim, out):
    """Train the toy contrastive alignment model on an embedding pairs file."""
    seed = _stage_seed(ctx, "align-train", seed)
    try:
        config = AlignTrainConfig(steps=steps, learning_rate=lr,
                                  mask_ratio=mask_ratio,
                                  unmasked_tail_fraction=tail_fraction,
                                  seed=seed, proj_dim=proj_dim)
    except ValueError as e:
        raise ConfigConflict(str(e)) from None
    v, t = fileio.read_pairs(pairs_path)
    result = train_alignment(v, t, config)
    summary = {
        "initial_loss": result.loss_curve[0],
        "final_loss": result.loss_curve[-1],
        "log_tau": result.log_tau,
        "steps": steps,
    }
    if out:
        payload = {**summary,
                   "loss_curve": result.loss_curve,
                   "w_video": result.w_video.tolist(),
                   "w_text": result.w_text.tolist()}
        fileio.atomic_write_text(
            out, json.dumps(payload, ensure_ascii=False) + "\n")
    click.echo(json.dumps(summary))


@cli.command(name="eval")
@click.option("--sim", "sim_path", required=True, type=click.Path())
@click.option("--metric", required=True,
              type=click.Choice(["r@k", "topk", "avg"]))
@click.option("--k", default=1, show_default=True)
@click.option("--labels", "labels_path", type=click.Path(), default=None,
              help="One target column index per row; default is the diagonal.")
def eval_cmd(sim_path, metric, k, labels_path):
    """Ranking metrics over a similarity matrix file."""
    sim = fileio.read_matrix(sim_path)
    if labels_path:
        with open(labels_path, encoding="utf-8") as f:
            labels = [int(line) for line in f if line.strip()]
        if len(labels) != sim.shape[0]:
            raise ValidationFailed(
                f"{len(labels)} labels for {sim.shape[0]} rows")
    else:
        labels = list(range(sim.shape[0]))
    if metric == "r@k":
        value = recall_at_k(sim, labels, k)
    elif metric == "topk":
        value = topk_accuracy(sim, labels, k)
    else:
        value = avg_top1_top5(sim, labels)
    click.echo(repr(value))


_EXIT_VALIDATION = 2
_EXIT_SERVICE = 3
_EXIT_CONFIG = 4


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False,
                 auto_envvar_prefix="VTCURATE")
        return 0
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        click.echo(f"config error: {e.format_message()}", err=True)
        return _EXIT_CONFIG
    except ConfigConflict as e:
        click.echo(f"config error: {e}", err=True)
        return _EXIT_CONFIG
    except (ServiceError, PartialResult) as e:
        click.echo(f"service failure: {e}", err=True)
        return _EXIT_SERVICE
    except ValidationFailed as e:
        click.echo(f"validation failed: {e}", err=True)
        for offender in getattr(e, "offenders", []):
            click.echo(f"  offending record: {offender}", err=True)
        return _EXIT_VALIDATION
    except (InvalidRecord, MalformedLine, MissingInput) as e:
        click.echo(f"validation failed: {e}", err=True)
        return _EXIT_VALIDATION
    except VtcurateError as e:
        click.echo(f"error: {e}", err=True)
        return _EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
