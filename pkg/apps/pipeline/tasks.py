import logging
from typing import Any, Dict

from celery import shared_task

from apps.pipeline.runners.train_runner import run_train

logger = logging.getLogger(__name__)


@shared_task(bind=True, name='pipeline.train_horizon')
def train_horizon(self, inputs: Dict[str, Any], params: Dict[str, Any]) -> Dict[str, Any]:
    """Train one horizon's network (Celery task).

    Args:
        inputs: {'data_dir': str, 'out_dir': str}
        params: run_train parameters; ``delta`` selects the horizon
    Returns:
        dict: the runner result with artifacts, metrics and evidence
    """
    logger.info('Task %s: training %s head for delta=%ss',
                self.request.id, params.get('head') or 'grid', params.get('delta'))
    result = run_train(inputs, params)
    if 'error' in result['metrics']:
        logger.error('Task %s failed: %s', self.request.id, result['metrics']['error'])
    return result
