import logging
import sys
from pathlib import Path

import hydra
from hydra.utils import to_absolute_path
from omegaconf import DictConfig, OmegaConf

from src import pipeline
from src.runner import EndpointConfig, EndpointError

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ENDPOINT = range(4)


def path(value: str) -> Path:
    # Hydra runs the job from its own output directory.
    return Path(to_absolute_path(value))


def dispatch(config: DictConfig) -> dict:
    """Run the selected subcommand, return the numbers worth publishing."""
    match config.command:
        case "generate":
            section = config.generate
            count = pipeline.generate(
                path(section.out),
                section.n,
                section.m,
                section.backtracks,
                section.noise,
                section.shuffle,
                section.count,
                config.seed,
                section.max_backtracks,
                section.max_attempts,
                section.misleading_open_doors,
                section.workers,
            )
            return {"instances": count}
        case "prompt":
            section = config.prompt
            count = pipeline.prompt(
                path(section.tasks),
                path(section.out),
                section.include_guidance,
                section.n_few_shot,
            )
            return {"prompts": count}
        case "run":
            section = config.run
            endpoint = EndpointConfig.from_dict(
                OmegaConf.to_container(config.endpoint, resolve=True)
            )
            summary = pipeline.run(
                path(section.tasks),
                path(section.out),
                endpoint,
                section.k_runs,
                section.include_guidance,
                section.n_few_shot,
            )
            return {
                "requested": summary.requested,
                "skipped": summary.skipped,
                "failures": summary.n_failures,
            }
        case "simulate":
            section = config.simulate
            count = pipeline.simulate(
                path(section.tasks),
                path(section.out),
                section.epsilon,
                section.k_runs,
                config.seed,
            )
            return {"responses": count}
        case "evaluate":
            section = config.evaluate
            results = pipeline.evaluate(
                path(section.tasks), path(section.responses), path(section.out)
            )
            return {
                "verdicts": len(results),
                "pass@1": sum(r.exact_match for r in results) / max(len(results), 1),
            }
        case "report":
            section = config.report
            fit = pipeline.report(
                path(section.verdicts),
                path(section.tasks),
                path(section.out_prefix),
                section.bin_key,
                section.bin_width,
                section.intercept,
            )
            print(fit.summary())
            return {"l0_wls": fit.l0_wls, "l0_ols": fit.l0_ols, "r2": fit.r_squared}
        case "oracle_check":
            section = config.oracle_check
            summary = pipeline.oracle_check(path(section.tasks), section.max_states)
            return {"checked": summary.checked, "skipped": summary.skipped}
        case "select":
            section = config.select
            count = pipeline.select(
                path(section.tasks),
                path(section.out),
                section.per_bin,
                section.l_min,
                section.l_max,
                config.seed,
            )
            return {"selected": count}
        case _:
            raise pipeline.ConfigError(f"Unknown command: {config.command}")


@hydra.main(version_base="1.3", config_path="configs", config_name="base")
def main(config: DictConfig):
    exit_code = run_command(config)
    if exit_code != EXIT_OK:
        sys.exit(exit_code)


def run_command(config: DictConfig) -> int:
    log.info(f"Resolved config:\n{OmegaConf.to_yaml(config, resolve=True)}")

    try:
        metrics = dispatch(config)
    except pipeline.ConfigError as error:
        log.error(f"Usage error: {error}")
        return EXIT_USAGE
    except EndpointError as error:
        log.error(f"Endpoint error: {error}")
        return EXIT_ENDPOINT
    except (ValueError, OSError) as error:
        log.error(f"{type(error).__name__}: {error}")
        return EXIT_DATA

    if config.command in ("run", "report"):
        pipeline.publish(
            metrics,
            OmegaConf.to_container(config, resolve=True),
            config.wandb.project,
            config.wandb.group,
            config.wandb.mode,
            pipeline.report_path(path(config.report.out_prefix), "bins.csv")
            if config.command == "report"
            else None,
        )
    log.info(f"Done: {metrics}")
    return EXIT_OK


if __name__ == "__main__":
    # Launch the hydra app.
    main()
