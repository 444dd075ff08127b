import pytest

from app.core.exceptions import NotHeldError, QtyExceedsCapacityError
from app.schemas.line import PoolKind
from app.services.resources import Request, ResourcePool


def pool(capacity=2):
    return ResourcePool(id="operators", kind=PoolKind.OPERATOR, capacity=capacity)


class TestResourcePool:

    def test_seize_grants_when_free(self):
        p = pool()
        assert p.seize(Request(1, 1, 0.0), 0.0)
        assert p.in_use == 1
        assert p.held_by(1) == 1

    def test_request_beyond_capacity_raises(self):
        with pytest.raises(QtyExceedsCapacityError):
            pool(2).seize(Request(1, 3, 0.0), 0.0)

    def test_release_of_units_not_held_raises(self):
        p = pool()
        p.seize(Request(1, 1, 0.0), 0.0)
        with pytest.raises(NotHeldError):
            p.release(2, 1, 1.0)
        with pytest.raises(NotHeldError):
            p.release(1, 2, 1.0)

    def test_fifo_grants_on_release(self):
        p = pool(1)
        p.seize(Request(1, 1, 0.0), 0.0)
        p.seize(Request(2, 1, 0.5), 0.5)
        p.seize(Request(3, 1, 0.7), 0.7)
        granted = p.release(1, 1, 1.0)
        assert [r.entity_id for r in granted] == [2]
        assert granted[0].granted_at == 1.0
        assert p.grant_log == [1, 2]

    def test_no_overtaking(self):
        p = pool(2)
        p.seize(Request(1, 1, 0.0), 0.0)
        assert not p.seize(Request(2, 2, 0.0), 0.0)
        # one unit is free but the head of the queue needs two
        assert not p.seize(Request(3, 1, 0.0), 0.0)
        assert p.release(1, 1, 1.0)[0].entity_id == 2
        assert p.held_by(3) == 0

    def test_release_grants_every_head_that_fits(self):
        p = pool(2)
        p.seize(Request(1, 2, 0.0), 0.0)
        p.seize(Request(2, 1, 0.0), 0.0)
        p.seize(Request(3, 1, 0.0), 0.0)
        assert [r.entity_id for r in p.release(1, 2, 2.0)] == [2, 3]

    def test_busy_time_and_value_class(self):
        p = pool(2)
        p.seize(Request(1, 1, 0.0), 0.0)
        p.seize(Request(2, 1, 1.0, non_value_adding=True), 1.0)
        p.release(1, 1, 3.0)
        p.release(2, 1, 2.0)
        assert p.busy_time_accumulator == pytest.approx(4.0)
        assert p.busy_nva_hours == pytest.approx(1.0)
        assert p.busy_va_hours == pytest.approx(3.0)

    def test_close_accrues_units_still_held(self):
        p = pool(1)
        p.seize(Request(1, 1, 6.0), 6.0)
        p.close(8.0)
        assert p.busy_time_accumulator == pytest.approx(2.0)

    def test_zero_quantity_rejected(self):
        with pytest.raises(ValueError):
            pool().seize(Request(1, 0, 0.0), 0.0)
