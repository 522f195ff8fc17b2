import struct

import numpy as np
import pytest

from blrkernels.errors import TensorFormatError, TruncatedTensorError
from blrkernels.tensor_io import from_bytes, read_tensor, to_bytes, write_tensor


@pytest.mark.parametrize("shape", [(), (0,), (5,), (3, 4), (2, 3, 4)])
def test_round_trip(shape, tmp_path):
    a = np.arange(int(np.prod(shape)), dtype=np.float32).reshape(shape) - 1.5
    p = tmp_path / "t.blrt"
    write_tensor(p, a)
    b = read_tensor(p)
    assert b.shape == a.shape and b.dtype == np.float32
    np.testing.assert_array_equal(a, b)


def test_header_layout():
    data = to_bytes(np.ones((2, 3), np.float32))
    assert data[:4] == b"BLRT"
    assert struct.unpack_from("<III", data, 4) == (1, 0, 2)
    assert struct.unpack_from("<2Q", data, 16) == (2, 3)
    assert len(data) == 16 + 16 + 6 * 4


def test_truncation_and_corruption():
    data = to_bytes(np.ones((4, 4), np.float32))
    for cut in (3, 17, len(data) - 1):
        with pytest.raises(TruncatedTensorError):
            from_bytes(data[:cut])
    with pytest.raises(TensorFormatError, match="magic"):
        from_bytes(b"XXXX" + data[4:])
    with pytest.raises(TensorFormatError, match="version"):
        from_bytes(data[:4] + struct.pack("<I", 9) + data[8:])
    with pytest.raises(TensorFormatError, match="dtype"):
        from_bytes(data[:8] + struct.pack("<I", 7) + data[12:])
    with pytest.raises(TensorFormatError, match="trailing"):
        from_bytes(data + b"\0")
