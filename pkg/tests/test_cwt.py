import numpy as np
import pytest

from wavediag.cwt import cwt, cwt_direct, magnitude, read_scalogram, time_domain_wavelet, write_scalogram
from wavediag.prng import CounterRng
from wavediag.wavelets import WaveletSpec, make_scale_grid

from conftest import make_record

FS = 10000.0
N = 10000
ONE_VOICE = 2.0 ** (1 / 10)

# interior bands for the quadrature-oracle comparison: rows are restricted to
# scales whose time-domain tail has decayed below ~1e-7 within the margin
# (bump decays sub-exponentially, so only its small high-frequency scales fit
# a 1024-sample record; amor would be Nyquist-truncated there instead)
ORACLE_BANDS = {"amor": (40.0, 160.0, 250), "morse": (40.0, 160.0, 250), "bump": (320.0, 440.0, 350)}


def tone_record(freq_hz, n=N, fs=FS, amp=1.0, phase=0.0):
    t = np.arange(n) / fs
    return make_record(amp * np.cos(2 * np.pi * freq_hz * t + phase), fs)


def smooth_random_record(seed, n=1024, fs=1000.0):
    """Tones plus band-limited noise covering both oracle bands."""
    rng = CounterRng(seed)
    t = np.arange(n) / fs
    x = (
        np.cos(2 * np.pi * 50 * t + 1.0)
        + 0.5 * np.cos(2 * np.pi * 120 * t + 2.0)
        + 0.3 * np.cos(2 * np.pi * 360 * t + 0.7)
    )
    spec = np.fft.rfft(rng.normals(n))
    spec[np.fft.rfftfreq(n, 1.0 / fs) > 450.0] = 0.0
    return make_record(x + 0.1 * np.fft.irfft(spec, n), fs)


class TestCwt:
    def test_zero_signal_gives_zero_scalogram(self):
        rec = make_record(np.zeros(2048), FS)
        spec = WaveletSpec.morse()
        grid = make_scale_grid(2048, FS, spec, 10, 10.0)
        assert np.all(cwt(rec, spec, grid).coeffs == 0)

    def test_60hz_tone_ridge_location_and_magnitude(self):
        rec = tone_record(60.0)
        spec = WaveletSpec.morse()
        grid = make_scale_grid(N, FS, spec, 10, 10.0)
        mag = magnitude(cwt(rec, spec, grid))
        ridge = int(mag.max(axis=1).argmax())
        ridge_freq = grid.center_freqs_hz[ridge]
        assert ridge_freq / ONE_VOICE <= 60.0 <= ridge_freq * ONE_VOICE
        central = mag[ridge, 1000:9000]  # central 80% of columns
        assert central.min() >= 0.9 and central.max() <= 1.1

    def test_linearity(self):
        rng = CounterRng(17)
        x = rng.normals(4096)
        y = rng.normals(4096)
        spec = WaveletSpec.amor()
        grid = make_scale_grid(4096, FS, spec, 10, 20.0)
        both = cwt(make_record(x + y, FS), spec, grid).coeffs
        parts = cwt(make_record(x, FS), spec, grid).coeffs + cwt(make_record(y, FS), spec, grid).coeffs
        assert np.abs(both - parts).max() < 1e-9

    def test_grid_length_mismatch_rejected(self):
        spec = WaveletSpec.morse()
        grid = make_scale_grid(1024, FS, spec, 10, 10.0)
        with pytest.raises(ValueError, match="grid built for"):
            cwt(make_record(np.zeros(512), FS), spec, grid)

    def test_deterministic(self):
        rec = smooth_random_record(3)
        spec = WaveletSpec.bump()
        grid = make_scale_grid(1024, 1000.0, spec, 10, 10.0)
        a = cwt(rec, spec, grid).coeffs
        b = cwt(rec, spec, grid).coeffs
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("family", ["amor", "bump", "morse"])
    @pytest.mark.parametrize("freq", [30.0, 60.0, 120.0, 500.0, 2000.0])
    def test_ridge_accuracy_five_tones(self, family, freq):
        spec = getattr(WaveletSpec, family)()
        grid = make_scale_grid(N, FS, spec, 10, 10.0)
        mag = magnitude(cwt(tone_record(freq), spec, grid))
        ridge = int(mag[:, 1000:9000].max(axis=1).argmax())
        ridge_freq = grid.center_freqs_hz[ridge]
        assert ridge_freq / ONE_VOICE <= freq <= ridge_freq * ONE_VOICE
        central = mag[ridge, 2000:8000]
        assert central.min() >= 0.9 and central.max() <= 1.1

    def test_shift_covariance_on_fitting_scales(self):
        spec = WaveletSpec.morse()
        grid = make_scale_grid(N, FS, spec, 10, 10.0)
        t = np.arange(N) / FS
        x = np.cos(2 * np.pi * 60 * t)  # integer cycle count: roll is seamless
        base = cwt(make_record(x, FS), spec, grid).coeffs
        shifted = cwt(make_record(np.roll(x, 37), FS), spec, grid).coeffs
        # rows whose wavelet tail (~25 scale units) fits inside the margin
        rows = (grid.center_freqs_hz >= 50.0) & (grid.center_freqs_hz <= 2000.0)
        err = np.abs(shifted[rows, 2000:8000] - np.roll(base, 37, axis=1)[rows, 2000:8000])
        assert err.max() < 1e-6


class TestOracleEquivalence:
    @pytest.mark.parametrize("family", ["amor", "bump", "morse"])
    def test_fft_path_matches_direct_quadrature(self, family):
        rec = smooth_random_record(7)
        spec = getattr(WaveletSpec, family)()
        grid = make_scale_grid(1024, 1000.0, spec, 10, 10.0)
        f_lo, f_hi, margin = ORACLE_BANDS[family]
        rows = [i for i, f in enumerate(grid.center_freqs_hz) if f_lo <= f <= f_hi]
        rows = [rows[0], rows[len(rows) // 2], rows[-1]]
        positions = np.arange(margin, 1024 - margin, 8)
        full = cwt(rec, spec, grid).coeffs[np.ix_(rows, positions)]
        direct = cwt_direct(rec, spec, grid.scales[rows], positions)
        assert np.abs(full).max() > 0.05  # the comparison is not vacuous
        assert np.abs(full - direct).max() <= 1e-6

    def test_zero_signal_gives_zeros(self):
        rec = make_record(np.zeros(512), 1000.0)
        out = cwt_direct(rec, WaveletSpec.morse(), [5.0], [100, 200])
        assert np.all(out == 0)

    def test_single_position_is_a_plain_inner_product(self):
        rec = smooth_random_record(5, n=256, fs=1000.0)
        spec = WaveletSpec.morse()
        scale, pos = 4.0, 128
        out = cwt_direct(rec, spec, [scale], [pos], fine_factor=2)
        m_fine = 2 * 512
        psi = time_domain_wavelet(spec, scale, m_fine)
        acc = 0.0 + 0.0j
        for n_idx in range(256):
            weight = 0.5 if n_idx in (0, 255) else 1.0
            acc += weight * rec.samples[n_idx] * np.conj(psi[(n_idx - pos) % m_fine])
        assert abs(out[0, 0] - acc) < 1e-12

    def test_length_cap(self):
        rec = make_record(np.zeros(5000), 1000.0)
        with pytest.raises(ValueError, match="4096"):
            cwt_direct(rec, WaveletSpec.morse(), [5.0], [100])


class TestMagnitude:
    def test_pointwise_abs(self):
        rec = tone_record(60.0, n=2048)
        spec = WaveletSpec.amor()
        grid = make_scale_grid(2048, FS, spec, 10, 20.0)
        s = cwt(rec, spec, grid)
        s.coeffs[0, 0] = 3 + 4j
        mag = magnitude(s)
        assert mag[0, 0] == 5.0
        assert mag.shape == s.coeffs.shape

    def test_zero_matrix(self):
        rec = make_record(np.zeros(1024), FS)
        spec = WaveletSpec.amor()
        grid = make_scale_grid(1024, FS, spec, 10, 20.0)
        assert np.all(magnitude(cwt(rec, spec, grid)) == 0)

    def test_tone_ridge_magnitude_near_one(self):
        rec = tone_record(60.0)
        spec = WaveletSpec.morse()
        grid = make_scale_grid(N, FS, spec, 10, 10.0)
        mag = magnitude(cwt(rec, spec, grid))
        assert mag.max() == pytest.approx(1.0, rel=0.1)


class TestScalogramDump:
    def test_round_trip(self, tmp_path):
        rec = smooth_random_record(11)
        spec = WaveletSpec.morse()
        grid = make_scale_grid(1024, 1000.0, spec, 10, 10.0)
        s = cwt(rec, spec, grid)
        path = tmp_path / "dump.wdsc"
        write_scalogram(s, path)
        coeffs, rate = read_scalogram(path)
        assert rate == 1000.0
        assert np.array_equal(coeffs, s.coeffs)
        raw = path.read_bytes()
        assert raw[:4] == b"WDSC"
        n_scales, n_times = s.coeffs.shape
        assert len(raw) == 4 + 4 + 4 + 8 + n_scales * n_times * 16

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.wdsc"
        path.write_bytes(b"NOPE" + b"\0" * 32)
        with pytest.raises(ValueError, match="not a scalogram"):
            read_scalogram(path)
