import sys
import traceback

import structlog

from ltfbgan.commands import bench_datastore, compare, generate_data, train
from ltfbgan.ConfigValidationError import ConfigValidationError
from ltfbgan.ContractError import ContractError
from ltfbgan.config.get_merged_config import get_merged_config
from ltfbgan.DataStoreError import DataStoreError
from ltfbgan.NumericError import NumericAbortError

LTFBGAN_VERSION = "0.1.0"
module_logger = structlog.getLogger(__name__)

COMMANDS = {
    "generate-data": generate_data,
    "train": train,
    "bench-datastore": bench_datastore,
    "compare": compare,
}


def main():
    try:
        config = get_merged_config(logger=module_logger)

        structlog.configure(
            wrapper_class=structlog.make_filtering_bound_logger(config.log_level),
        )

        logger = structlog.getLogger()
        logger.debug("ltfbgan version", version=LTFBGAN_VERSION)

        config.log_details()

        COMMANDS[config.subcommand](config)

    except NumericAbortError as e:
        module_logger.error(f"Training aborted: {e.error_message}")
        module_logger.error(f"  Trainer {e.trainer_id} at step {e.step}")
        module_logger.error("Troubleshooting: lower --lr, check the dataset for non-finite values, or run with -L DEBUG")
        module_logger.debug("Numeric abort details", **e.get_structured_error())
        sys.exit(2)

    except ConfigValidationError as e:
        module_logger.error(f"Configuration error: {e}")
        module_logger.debug("Configuration problems", **e.get_structured_error())
        sys.exit(1)

    except ContractError as e:
        module_logger.error(f"Invalid request: {e}")
        module_logger.debug("Contract error details", **e.get_structured_error())
        sys.exit(1)

    except ValueError as e:
        module_logger.error(f"Configuration error: {str(e)}")
        sys.exit(1)

    except DataStoreError as e:
        module_logger.error(f"Data error: {str(e)}")
        module_logger.error("Check --data-dir, or run 'ltfbgan generate-data' first")
        module_logger.debug("Data error details", **e.get_structured_error())
        sys.exit(3)

    except (FileNotFoundError, PermissionError) as e:
        module_logger.error(f"File system error: {str(e)}")
        sys.exit(3)

    except KeyboardInterrupt:
        module_logger.warning("Operation cancelled by user")
        sys.exit(130)

    except Exception as e:
        module_logger.error(f"Unexpected error [{type(e).__name__}]: {str(e)}")
        module_logger.debug("Full traceback", traceback=traceback.format_exc())
        module_logger.error("Run with -L DEBUG for full traceback")
        sys.exit(1)


if __name__ == "__main__":
    main()
