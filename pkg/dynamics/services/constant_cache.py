"""
Fitted-constant cache: Django cache first, then the FittedConstant table,
then a fresh fit. Storage failures never abort a computation.
"""
import logging

from django.core.cache import cache
from django.db import IntegrityError

from dynamics.models import FittedConstant
from dynamics.utils import get_config, write_json

logger = logging.getLogger(__name__)


class ConstantCacheService:
    """Lookup and persistence of fitted constants keyed by (kind, f, a, seed, samples)."""

    CACHE_PREFIX = 'fitted_constant'
    CACHE_TIMEOUT = 3600  # 1 hour

    @staticmethod
    def cache_key(kind, polynomial='', character='', seed=0, samples=0):
        return f"{ConstantCacheService.CACHE_PREFIX}:{kind}:{polynomial}:{character}:{seed}:{samples}"

    @staticmethod
    def get_or_fit(kind, key, fit):
        """
        Return a fitted constant, computing it only when no stored value exists.

        Args:
            kind: 'c2', 'ca' or 'A_s'
            key: dict with 'polynomial', 'character', 'seed' and 'samples'
            fit: zero-argument callable returning the value

        Returns:
            float: The fitted value

        Note:
            - Falls back to the database if the cache fails
            - Falls back to fitting if the database fails
            - A failed store is logged and the fitted value still returned
        """
        polynomial = key.get('polynomial', '')
        character = key.get('character', '')
        seed = int(key.get('seed', 0))
        samples = int(key.get('samples', 0))
        cache_key = ConstantCacheService.cache_key(kind, polynomial, character, seed, samples)

        try:
            cached = cache.get(cache_key)
            if cached is not None:
                logger.debug(f"Returning cached {kind} constant: {cached}")
                return cached
        except Exception as e:
            logger.warning(f"Cache get failed, falling back to database: {e}")

        try:
            row = FittedConstant.objects.filter(
                kind=kind, polynomial=polynomial, character=character, seed=seed, samples=samples,
            ).first()
            if row is not None:
                ConstantCacheService._cache_set(cache_key, row.value)
                logger.info(f"Loaded stored constant {row}")
                return row.value
        except Exception as e:
            logger.warning(f"Constant lookup failed, fitting afresh: {e}")

        value = float(fit())

        try:
            FittedConstant.objects.create(
                kind=kind, polynomial=polynomial, character=character,
                seed=seed, samples=samples, value=value,
            )
        except IntegrityError:
            logger.debug(f"{kind} constant for {polynomial}|{character} stored concurrently")
        except Exception as e:
            logger.warning(f"Failed to store fitted constant: {e}")

        ConstantCacheService._cache_set(cache_key, value)
        logger.info(f"Fitted {kind} constant {polynomial}|{character} (seed {seed}, {samples} samples) = {value:.6g}")
        return value

    @staticmethod
    def _cache_set(cache_key, value):
        try:
            cache.set(cache_key, value, ConstantCacheService.CACHE_TIMEOUT)
        except Exception as cache_error:
            logger.warning(f"Cache set failed: {cache_error}")

    @staticmethod
    def export_sidecar(path=None):
        """
        Write every stored constant to a JSON sidecar.

        Returns:
            int: number of constants written, or 0 if the database is unavailable
        """
        path = path or get_config('constant_sidecar')
        try:
            rows = [
                {**c.as_key(), 'value': c.value}
                for c in FittedConstant.objects.all()
            ]
        except Exception as e:
            logger.error(f"Error reading fitted constants: {e}", exc_info=True)
            return 0
        write_json(path, {'constants': rows})
        logger.info(f"Exported {len(rows)} fitted constants to {path}")
        return len(rows)

    @staticmethod
    def clear_cache():
        """
        Clear cached constants.

        Handles cache failures gracefully without raising exceptions.
        """
        try:
            cache.clear()
            logger.info("Fitted constant cache cleared")
        except Exception as e:
            logger.warning(f"Failed to clear constant cache: {e}")
