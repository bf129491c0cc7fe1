"""Command-line pipeline: ingest -> train -> backtest -> report (+ forecast).

Every stage reads the same flat config file, takes the same overrides
(--seed, --out, --agent), and leaves a manifest entry with input and
artifact checksums so a finished run directory is self-describing.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import artifacts, autodiff as ad, data, forecaster, networks as nets
from . import plotting, report, training
from .agents.ddpg import DdpgAgent
from .agents.mpt import MptAgent
from .agents.sac import SacAgent
from .backtest import component_names, result_report, run_backtest, write_trace_csv
from .config import AGENT_KINDS, RunConfig, load_config
from .environment import EnvConfig, PortfolioEnv

TRACE_CSV = "trace.csv"
REPORT_JSON = "report.json"
TRAINING_LOG = "training_log.csv"


def env_config(cfg: RunConfig) -> EnvConfig:
    return EnvConfig(
        cost_rate=cfg.cost_rate,
        window=cfg.window,
        include_cash=cfg.include_cash,
        reward_kind=cfg.reward_kind,
        dsr_eta=cfg.dsr_eta,
        initial_value=cfg.initial_value,
        discount=cfg.gamma,
    )


def net_config(cfg: RunConfig) -> nets.NetConfig:
    return nets.NetConfig(
        n_assets=len(cfg.tickers),
        window=cfg.window,
        hidden=cfg.hidden,
        lstm_layers=cfg.lstm_layers,
        include_cash=cfg.include_cash,
        leaky_slope=cfg.leaky_slope,
        squash_scale=cfg.squash_scale,
    )


def build_agent(cfg: RunConfig, frame: data.MarketFrame, rng: np.random.Generator):
    """Instantiate the configured agent; `frame` is the split it will act on."""
    if cfg.agent == "mpt":
        return MptAgent(frame, include_cash=cfg.include_cash,
                        lookback=cfg.mpt_lookback, lam=cfg.mpt_lambda)
    ncfg = net_config(cfg)
    if cfg.agent == "ddpg":
        return DdpgAgent(
            ncfg, rng, gamma=cfg.gamma, tau=cfg.tau,
            actor_lr=cfg.actor_lr, critic_lr=cfg.critic_lr,
            batch_size=cfg.batch_size, buffer_capacity=cfg.buffer_capacity,
            ou_mu=cfg.ou_mu, ou_sigma=cfg.ou_sigma, ou_theta=cfg.ou_theta,
        )
    return SacAgent(
        ncfg, rng, gamma=cfg.gamma, tau=cfg.tau,
        actor_lr=cfg.actor_lr, critic_lr=cfg.critic_lr, value_lr=cfg.value_lr,
        alpha_lr=cfg.alpha_lr, initial_alpha=cfg.initial_alpha,
        batch_size=cfg.batch_size, buffer_capacity=cfg.buffer_capacity,
    )


def cmd_ingest(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    sources = {t: Path(cfg.data_dir) / f"{t}.csv" for t in cfg.tickers}
    checksums = {t: artifacts.sha256_file(p) for t, p in sources.items() if p.exists()}
    artifacts.manifest_begin(out, "ingest", cfg.to_dict(), checksums)

    series = {t: data.load_ohlcv_csv(p, t) for t, p in sources.items()}
    frame = data.align_frames(series)
    train_frame, _ = data.split_by_date(frame, cfg.train_end)
    cut = train_frame.n_days
    diffs = data.compute_log_diffs(frame, volume_eps=cfg.volume_eps)
    stats = data.fit_stats(diffs[:, : cut - 1], frame.assets)
    features = data.standardize(diffs, stats)
    artifacts.save_ingest(out, frame, features, stats, cut,
                          extra_meta={"train_end": cfg.train_end.isoformat(),
                                      "volume_eps": cfg.volume_eps})
    artifacts.manifest_finish(out, "ingest", [
        artifacts.FRAME_VALUES, artifacts.FEATURES, artifacts.STATS_MEAN,
        artifacts.STATS_STD, artifacts.INGEST_META])
    print(f"ingest: {frame.n_assets} assets x {frame.n_days} days "
          f"({cut} train / {frame.n_days - cut} test) -> {out}")
    return out


def cmd_train(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    ing = artifacts.load_ingest(out)
    artifacts.manifest_begin(out, "train", cfg.to_dict())

    log_path = out / TRAINING_LOG
    produced = [TRAINING_LOG]
    if cfg.agent == "mpt":
        training.write_training_log(log_path, [])  # nothing to learn
        print("train: mpt agent has no trainable parameters; log is empty")
    else:
        rng = np.random.default_rng(cfg.seed)
        train_frame = ing.train_frame()
        env = PortfolioEnv(train_frame, ing.train_features(), env_config(cfg))
        agent = build_agent(cfg, train_frame, rng)
        chash = artifacts.config_hash(cfg.to_dict())
        artifacts.save_checkpoint(out / artifacts.CHECKPOINT,
                                  agent.checkpoint_manifest(), chash, complete=False)
        log = training.train_agent(env, agent, episodes=cfg.episodes,
                                   steps_per_episode=cfg.steps_per_episode)
        training.write_training_log(log_path, log)
        artifacts.save_checkpoint(out / artifacts.CHECKPOINT,
                                  agent.checkpoint_manifest(), chash, complete=True)
        produced.append(artifacts.CHECKPOINT)
        last = log[-1]
        print(f"train: {cfg.agent} for {cfg.episodes} episodes "
              f"(last reward sum {last['reward_sum']:.4f}) -> {out}")
    artifacts.manifest_finish(out, "train", produced)
    return out


def cmd_backtest(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    ing = artifacts.load_ingest(out)
    artifacts.manifest_begin(out, "backtest", cfg.to_dict())

    test_frame = ing.test_frame()
    env = PortfolioEnv(test_frame, ing.test_features(), env_config(cfg))
    rng = np.random.default_rng(cfg.seed)
    agent = build_agent(cfg, test_frame, rng)
    if cfg.agent != "mpt":
        chash = artifacts.config_hash(cfg.to_dict())
        agent.load_manifest(
            artifacts.load_checkpoint(out / artifacts.CHECKPOINT, expected_hash=chash))

    result = run_backtest(env, agent)
    names = component_names(cfg.tickers, cfg.include_cash)
    write_trace_csv(out / TRACE_CSV, result, names)
    metrics_report = result_report(result, names, r_f=cfg.risk_free, lam=cfg.mpt_lambda)
    artifacts.write_json(out / REPORT_JSON, {
        "run_name": f"{cfg.agent}",
        "agent": cfg.agent,
        "seed": cfg.seed,
        "start_date": result.start_date.isoformat(),
        "initial_value": result.initial_value,
        "metrics": metrics_report.to_dict(),
    })
    artifacts.manifest_finish(out, "backtest", [TRACE_CSV, REPORT_JSON])
    print(f"backtest: {cfg.agent}, {result.n_steps} steps, "
          f"final value {metrics_report.final_portfolio_value:.6f} -> {out}")
    return out


def cmd_forecast(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    ing = artifacts.load_ingest(out)
    artifacts.manifest_begin(out, "forecast", cfg.to_dict())

    ncfg = net_config(cfg)
    rng = np.random.default_rng(cfg.seed)
    train_w, train_y = forecaster.build_forecast_dataset(
        ing.train_frame(), ing.train_features(), cfg.window)
    params, curve = forecaster.train_forecaster(
        train_w, train_y, ncfg, rng,
        epochs=cfg.forecast_epochs, batch_size=cfg.forecast_batch_size,
        lr=cfg.forecast_lr, val_fraction=cfg.val_fraction)

    test_frame = ing.test_frame()
    test_w, test_y = forecaster.build_forecast_dataset(
        test_frame, ing.test_features(), cfg.window)
    with ad.no_grad():
        preds = nets.forecaster_predict(params, test_w, ncfg).data
    test_loss = float(np.mean(np.sqrt(np.mean((preds - test_y) ** 2, axis=0))))
    accuracy = forecaster.directional_accuracy(preds, test_y)

    pred_dates = [test_frame.dates[t + 1] for t in range(cfg.window - 1, test_frame.n_days - 1)]
    with open(out / "forecast_predictions.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + [f"pred_{t}" for t in cfg.tickers]
                        + [f"actual_{t}" for t in cfg.tickers])
        for i, day in enumerate(pred_dates):
            writer.writerow([day.isoformat()] + [repr(float(x)) for x in preds[i]]
                            + [repr(float(x)) for x in test_y[i]])
    with open(out / "forecast_curve.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for row in curve:
            writer.writerow([row["epoch"], repr(row["train_loss"]), repr(row["val_loss"])])
    artifacts.write_json(out / "forecast_metrics.json", {
        "test_mean_rmse": test_loss,
        "directional_accuracy": accuracy,
        "train_loss_final": curve[-1]["train_loss"],
        "val_loss_final": curve[-1]["val_loss"],
    })
    plotting.plot_loss_curve(curve, out / "forecast_loss.png")
    plotting.plot_forecast_scatter(preds, test_y, out / "forecast_scatter.png")
    artifacts.manifest_finish(out, "forecast", [
        "forecast_predictions.csv", "forecast_curve.csv", "forecast_metrics.json",
        "forecast_loss.png", "forecast_scatter.png"])
    print(f"forecast: test mean RMSE {test_loss:.6f}, "
          f"directional accuracy {accuracy:.3f} -> {out}")
    return out


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="flat key = value config file")
    parser.add_argument("--seed", type=int, default=None, help="master RNG seed")
    parser.add_argument("--out", type=str, default=None, help="run output directory")
    parser.add_argument("--agent", choices=AGENT_KINDS, default=None, help="agent kind")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rlfolio",
        description="Train and evaluate portfolio agents on daily OHLCV data.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("ingest", "align CSVs, fit feature statistics, write tensors"),
        ("train", "train the configured agent on the train split"),
        ("backtest", "deterministic evaluation pass over the test split"),
        ("forecast", "train the supervised return forecaster"),
    ]:
        p = sub.add_parser(name, help=doc)
        _add_run_flags(p)
    p = sub.add_parser("report", help="merge completed backtests into tables and figures")
    p.add_argument("runs", nargs="+", help="backtest run directories")
    p.add_argument("--out", type=str, required=True, help="report output directory")

    args = parser.parse_args(argv)
    if args.command == "report":
        made = report.cmd_report(args.runs, args.out)
        for name, path in made.items():
            print(f"report: {name} -> {path}")
        return 0

    cfg = load_config(args.config, overrides={
        "seed": args.seed, "out_dir": args.out, "agent": args.agent})
    command = {"ingest": cmd_ingest, "train": cmd_train,
               "backtest": cmd_backtest, "forecast": cmd_forecast}[args.command]
    command(cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
