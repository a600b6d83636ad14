"""
Tests for the JSON channel file format.

Run with: pytest test/test_channel_file.py
"""
import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from pebkit.channel_file import (
    FORMAT_VERSION,
    ChannelFile,
    encode_transcript,
    read_channel_file,
    write_channel_file,
    write_transcript,
)
from pebkit.channels import ChoiMatrix, DensityMatrix, KrausSet, kraus_to_choi, kraus_to_stinespring, random_density
from pebkit.errors import InputError
from pebkit.protocol import simulate_locc_exact
from pebkit.zoo import amplitude_damping_qubit, random_rank_k_channel


class TestRoundTrip:
    def test_kraus_bit_exact(self, tmp_path):
        """Write then read reproduces every float exactly."""
        K = random_rank_k_channel(3, 2, 3, seed=1, scramble=True).kraus
        path = tmp_path / "k.json"
        write_channel_file(ChannelFile.from_kraus(K, {"note": "x"}), path)
        back = read_channel_file(path)
        assert back.metadata == {"note": "x"}
        for A, B in zip(K.operators, back.to_channel().operators):
            assert_array_equal(A, B)

    def test_choi(self, tmp_path):
        J = kraus_to_choi(amplitude_damping_qubit(0.3).kraus)
        path = tmp_path / "j.json"
        write_channel_file(ChannelFile.from_choi(J), path)
        back = read_channel_file(path).to_channel()
        assert isinstance(back, ChoiMatrix)
        assert_array_equal(back.matrix, J.matrix)

    def test_stinespring_reads_as_kraus(self, tmp_path):
        K = amplitude_damping_qubit(0.6).kraus
        path = tmp_path / "s.json"
        write_channel_file(ChannelFile.from_stinespring(kraus_to_stinespring(K)), path)
        back = read_channel_file(path)
        assert back.metadata["env_dim"] == 2
        for A, B in zip(K.operators, back.to_channel().operators):
            assert_array_equal(A, B)

    def test_state(self, tmp_path):
        rho = random_density(2, seed=4)
        path = tmp_path / "rho.json"
        write_channel_file(ChannelFile.from_state(rho), path)
        assert_array_equal(read_channel_file(path).to_state().matrix, rho.matrix)

    def test_layout(self):
        """Kraus data is data[alpha][row][col] of [re, im] pairs."""
        K = KrausSet((np.array([[1, 0], [0, 1j]]),))
        cf = ChannelFile.from_kraus(K)
        assert cf.format_version == FORMAT_VERSION
        assert cf.data[0][1][1] == [0.0, 1.0]


class TestParseErrors:
    def write(self, tmp_path, payload) -> str:
        path = tmp_path / "bad.json"
        path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
        return str(path)

    def valid(self) -> dict:
        return ChannelFile.from_kraus(KrausSet((np.eye(2),))).to_dict()

    def test_truncated(self, tmp_path):
        text = json.dumps(self.valid())[:40]
        with pytest.raises(InputError, match="malformed JSON"):
            read_channel_file(self.write(tmp_path, text))

    def test_wrong_version(self, tmp_path):
        payload = self.valid()
        payload["format_version"] = "other/2"
        with pytest.raises(InputError, match="^format_version"):
            read_channel_file(self.write(tmp_path, payload))

    def test_bad_dimension(self, tmp_path):
        payload = self.valid()
        payload["d"] = "2"
        with pytest.raises(InputError, match="^d:"):
            read_channel_file(self.write(tmp_path, payload))

    def test_bad_representation(self, tmp_path):
        payload = self.valid()
        payload["representation"] = "ptm"
        with pytest.raises(InputError, match="^representation"):
            read_channel_file(self.write(tmp_path, payload))

    def test_first_bad_entry_named(self, tmp_path):
        payload = self.valid()
        payload["data"][0][1][0] = "1+0i"
        with pytest.raises(InputError, match=r"data\[0\]\[1\]\[0\]"):
            read_channel_file(self.write(tmp_path, payload)).to_channel()

    def test_shape_mismatch(self, tmp_path):
        payload = self.valid()
        payload["d"] = 3
        with pytest.raises(InputError, match="does not match d=3"):
            read_channel_file(self.write(tmp_path, payload)).to_channel()

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="cannot read"):
            read_channel_file(tmp_path / "absent.json")

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "afile"
        blocker.write_text("")
        with pytest.raises(InputError, match="cannot write"):
            write_channel_file(ChannelFile.from_state(random_density(2, seed=1)), blocker / "rho.json")


class TestTranscript:
    def test_encode(self):
        rho = DensityMatrix.maximally_mixed(2)
        _, transcript = simulate_locc_exact(amplitude_damping_qubit(0.5).kraus, 2, rho)
        encoded = encode_transcript(transcript)
        assert encoded["one_way"] is True
        assert len(encoded["outcomes"]) == 8
        first = encoded["outcomes"][0]["message"]
        assert (first["from"], first["to"]) == ("alice", "bob")
        json.dumps(encoded)

    def test_write_creates_parent(self, tmp_path):
        rho = DensityMatrix.maximally_mixed(2)
        _, transcript = simulate_locc_exact(amplitude_damping_qubit(0.5).kraus, 2, rho)
        path = tmp_path / "runs" / "t.json"
        write_transcript(transcript, path)
        assert json.loads(path.read_text()) == json.loads(json.dumps(encode_transcript(transcript)))
