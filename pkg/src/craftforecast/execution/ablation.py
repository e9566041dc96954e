import logging

from craftforecast.data.dataset import Dataset
from craftforecast.execution.evaluate import evaluate
from craftforecast.execution.train import train
from craftforecast.logging import get_logger
from craftforecast.models import AblationRow, AblationTable, MetricReport, TrainConfig, VariantEnum

logger = logging.getLogger(__name__)

__all__ = ["ABLATION_ORDER", "run_ablation"]

# from the bare Koopman predictor to the full model, one module added per row
ABLATION_ORDER = (VariantEnum.kpm_only, VariantEnum.itm, VariantEnum.itm_etg, VariantEnum.full)


def run_ablation(config: TrainConfig, dataset: Dataset, seeds: list[int]) -> AblationTable:
    """
    Train and test every variant once per seed on the same data and average the test reports.
    """
    rows = []
    for variant in ABLATION_ORDER:
        reports: list[MetricReport] = []
        for seed in seeds:
            run_config = config.model_copy(update={"variant": variant, "seed": seed})
            run_logger = get_logger("craftforecast.execution.ablation.run", f"{variant.value} seed={seed}")
            result = train(run_config, dataset, log=run_logger)
            report, _ = evaluate(result.params, run_config, dataset.split("test"), result.scale)
            run_logger.info(f"test wMAPE {report.wmape}")
            reports.append(report)
        rows.append(AblationRow(variant=variant, report=MetricReport.mean(reports), seed_wmape=[r.wmape for r in reports]))
        logger.info(f"{variant.value}: mean test wMAPE {rows[-1].report.wmape}")
    return AblationTable(seeds=seeds, rows=rows)
