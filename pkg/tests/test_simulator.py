import dataclasses
import unittest

import numpy as np

from oran_fault_cli.exceptions import ScheduleMismatchException
from oran_fault_cli.injection import FaultEpisode, InjectionSchedule, StressRamp
from oran_fault_cli.simulation import (
    FaultEffects,
    SimConfig,
    Topology,
    TrafficProfile,
    apply_faults,
    generate_baseline,
    run_simulation,
)
from oran_fault_cli.simulation.simulator import low_pass, mean_reverting_noise
from oran_fault_cli.telemetry import FaultLabel, schema_from_preset
from oran_fault_cli.utils import derive_rng

from .oran_fault_test_case_mixin import OranFaultTestCaseMixin


def faulted_schedule() -> InjectionSchedule:
    return InjectionSchedule(
        (
            FaultEpisode(FaultLabel.NORMAL, 0, 50),
            FaultEpisode(
                FaultLabel.CPU_STRESS, 50, 100, {"du0": StressRamp(0.8, 1.0)}
            ),
            FaultEpisode(
                FaultLabel.PACKET_LOSS, 150, 50, {"cu0": StressRamp(0.03, 0.05)}
            ),
        )
    )


class TestTraffic(unittest.TestCase):
    def test_profile(self):
        profile = TrafficProfile()
        self.assertEqual(max(profile.hourly_load), 1.0)
        hours = np.arange(0, 86400, 60)
        load = profile.load_at(hours)
        self.assertTrue(np.all((load >= 0.0) & (load <= 1.0)))
        # Quiet nights, busy evenings
        self.assertLess(profile.load_at(np.array([4 * 3600]))[0], 0.3)
        self.assertGreater(profile.load_at(np.array([20 * 3600]))[0], 0.9)
        np.testing.assert_allclose(
            profile.load_at(np.array([0.0, 86400.0])), profile.load_at(np.zeros(2))
        )
        np.testing.assert_array_equal(
            TrafficProfile.constant(0.5).load_at(hours), np.ones_like(load)
        )
        with self.assertRaises(ValueError):
            TrafficProfile(hourly_load=(1.0,) * 23)

    def test_packet_size_multipliers(self):
        profile = TrafficProfile(packet_size_resample_s=5)
        multipliers = profile.packet_size_multipliers(np.random.default_rng(0), 12, 1.0)
        self.assertEqual(multipliers.shape, (3,))
        self.assertTrue(np.all((multipliers >= 0.8) & (multipliers <= 1.2)))
        np.testing.assert_array_equal(
            profile.packet_size_multipliers(np.random.default_rng(0), 12, 0.0),
            np.ones(3),
        )


class TestTopology(OranFaultTestCaseMixin, unittest.TestCase):
    def test_of_size(self):
        topology = Topology.of_size(2)
        self.assertEqual(topology.pairs, (("cu0", "du0", "ue0"), ("cu1", "du1", "ue1")))
        self.assertEqual(topology.du_ids, ("du0", "du1"))
        self.assertEqual(topology.pair_index("cu1"), 1)
        with self.assertRaises(ValueError):
            topology.pair_index("ue0")
        with self.assertRaises(ValueError):
            Topology.of_size(0)
        with self.assertRaises(ValueError):
            Topology((("cu0", "du0", "ue0"), ("cu0", "du1", "ue1")))

    def test_schema_must_match_topology(self):
        with self.assertRaises(ValueError):
            SimConfig(
                seed=0,
                duration_s=10,
                topology=Topology.of_size(2),
                schema=self.small_schema(),
            )
        with self.assertRaises(ValueError):
            self.small_sim_config(duration_s=0)
        with self.assertRaises(ValueError):
            FaultEffects(loss_gain=-1.0)
        with self.assertRaises(ValueError):
            FaultEffects(throttle_threshold=1.0)


class TestNoise(unittest.TestCase):
    def test_mean_reverting_noise(self):
        noise = mean_reverting_noise(np.random.default_rng(11), 200_000, 0.9)
        self.assertAlmostEqual(noise.mean(), 0.0, delta=0.05)
        self.assertAlmostEqual(noise.std(), 1.0, delta=0.03)
        lag_one = np.corrcoef(noise[:-1], noise[1:])[0, 1]
        self.assertAlmostEqual(lag_one, 0.9, delta=0.01)
        single = mean_reverting_noise(np.random.default_rng(0), 1, 0.9)
        self.assertEqual(single.shape, (1,))

    def test_low_pass(self):
        np.testing.assert_allclose(low_pass(np.full(10, 3.0), 0.1), np.full(10, 3.0))
        step = low_pass(np.concatenate([np.zeros(5), np.ones(200)]), 0.1)
        self.assertEqual(step[4], 0.0)
        self.assertAlmostEqual(step[5], 0.1)
        self.assertGreater(step[-1], 0.99)
        self.assertTrue(np.all(np.diff(step) >= 0))


class TestSimulator(OranFaultTestCaseMixin, unittest.TestCase):
    def medium_config(self, noise_scale: float = 1.0) -> SimConfig:
        return SimConfig(
            seed=3,
            duration_s=200,
            topology=Topology.of_size(1),
            schema=schema_from_preset("default", 1),
            noise_scale=noise_scale,
        )

    def test_determinism(self):
        config = self.small_sim_config()
        schedule = self.small_schedule(config)
        stream, labels = run_simulation(config, TrafficProfile(), schedule)
        again, labels_again = run_simulation(config, TrafficProfile(), schedule)
        np.testing.assert_array_equal(labels, labels_again)
        np.testing.assert_array_equal(labels, schedule.labels())
        for column_id in config.schema.feature_order:
            np.testing.assert_array_equal(
                stream.values(column_id), again.values(column_id)
            )

        other, _ = run_simulation(
            self.small_sim_config(seed=8), TrafficProfile(), schedule
        )
        self.assertFalse(
            np.array_equal(
                stream.values("du0.dl_bitrate"), other.values("du0.dl_bitrate")
            )
        )

    def test_native_cadences(self):
        config = self.small_sim_config(duration_s=30)
        baseline = generate_baseline(config, TrafficProfile(), derive_rng(0, "t"))
        self.assertEqual(baseline.values("du0.cqi").shape, (300,))
        self.assertEqual(baseline.values("host.cpu_usage").shape, (30,))
        np.testing.assert_array_equal(
            baseline.series("du0.cqi").timestamps_ms[:3], [0, 100, 200]
        )
        for column_id in config.schema.feature_order:
            self.assertTrue(np.all(baseline.values(column_id) >= 0.0))

    def test_noise_free_constant_load(self):
        config = self.medium_config(noise_scale=0.0)
        baseline = generate_baseline(
            config, TrafficProfile.constant(1.0), derive_rng(0, "t")
        )
        for column_id in config.schema.feature_order:
            values = baseline.values(column_id)
            np.testing.assert_allclose(values, np.full_like(values, values[0]))

    def test_unstressed_seconds_match_baseline(self):
        config = self.medium_config()
        profile = TrafficProfile()
        baseline = generate_baseline(
            config, profile, derive_rng(config.seed, "sim.baseline")
        )
        stream, labels = run_simulation(config, profile, faulted_schedule())
        np.testing.assert_array_equal(labels[:50], np.zeros(50))
        for metric in config.schema.metrics:
            samples_per_s = 1000 // metric.cadence_ms
            np.testing.assert_array_equal(
                stream.values(metric.id)[: 50 * samples_per_s],
                baseline.values(metric.id)[: 50 * samples_per_s],
            )

    def test_fault_effects(self):
        config = self.medium_config(noise_scale=0.0)
        profile = TrafficProfile.constant(1.0)
        baseline = generate_baseline(config, profile, derive_rng(0, "t"))
        stream = apply_faults(baseline, faulted_schedule(), config)

        cpu = stream.values("du0.cpu_usage")
        base_cpu = baseline.values("du0.cpu_usage")
        self.assertTrue(np.all(cpu[50:150] > base_cpu[50:150]))
        self.assertTrue(np.all(cpu <= 1.0))
        np.testing.assert_array_equal(cpu[150:], base_cpu[150:])
        self.assertGreater(
            stream.values("du0.cpu_throttled_periods")[149],
            stream.values("du0.cpu_throttled_periods")[50],
        )
        temperature = stream.values("host.temperature")
        self.assertGreater(temperature[149], baseline.values("host.temperature")[149])
        # Throttling degrades the DU's RAN KPIs
        dl = stream.values("du0.dl_bitrate")
        self.assertLess(dl[1490], baseline.values("du0.dl_bitrate")[1490])

        dropped = stream.values("cu0.net_rx_dropped")
        self.assertTrue(np.all(dropped[150:] > 0.0))
        self.assertTrue(np.all(dropped[:150] == 0.0))
        self.assertLess(
            stream.values("du0.cur_total_dl_bitrate")[1500:].mean(),
            baseline.values("du0.cur_total_dl_bitrate")[1500:].mean(),
        )
        self.assertGreater(stream.values("host.tcp_retrans")[160], 0.5)

    def test_packet_loss_scales_bitrate(self):
        config = dataclasses.replace(
            self.medium_config(), effects=FaultEffects(loss_jitter=0.0)
        )
        baseline = generate_baseline(config, TrafficProfile(), derive_rng(0, "t"))
        schedule = InjectionSchedule(
            (
                FaultEpisode(FaultLabel.NORMAL, 0, 100),
                FaultEpisode(
                    FaultLabel.PACKET_LOSS, 100, 100, {"du0": StressRamp(0.03, 0.03)}
                ),
            )
        )
        stream = apply_faults(baseline, schedule, config)
        for metric in ("cur_total_dl_bitrate", "dl_bitrate", "ul_bitrate"):
            column_id = f"du0.{metric}"
            np.testing.assert_allclose(
                stream.values(column_id)[1000:],
                0.97 * baseline.values(column_id)[1000:],
            )

        # Jitter only adds variance around the same mean
        jittered = apply_faults(baseline, schedule, self.medium_config())
        dl = jittered.values("du0.dl_bitrate")[1000:]
        base_dl = baseline.values("du0.dl_bitrate")[1000:]
        self.assertLess(dl.mean(), base_dl.mean())
        self.assertAlmostEqual(dl.mean() / base_dl.mean(), 0.97, delta=0.002)

    def test_effects_grow_with_stress_level(self):
        config = self.medium_config()
        baseline = generate_baseline(
            config, TrafficProfile(), derive_rng(config.seed, "sim.baseline")
        )

        def faulted(fault_type: FaultLabel, level: float):
            schedule = InjectionSchedule(
                (
                    FaultEpisode(FaultLabel.NORMAL, 0, 50),
                    FaultEpisode(
                        fault_type, 50, 150, {"du0": StressRamp(level, level)}
                    ),
                )
            )
            return apply_faults(baseline, schedule, config)

        for fault_type, column_id, low, high in (
            (FaultLabel.CPU_STRESS, "du0.cpu_usage", 0.5, 0.9),
            (FaultLabel.MEMORY_STRESS, "du0.mem_usage", 0.25, 0.5),
        ):
            mild = faulted(fault_type, low).values(column_id)[50:]
            severe = faulted(fault_type, high).values(column_id)[50:]
            self.assertGreater(severe.mean(), mild.mean(), column_id)

        mild = faulted(FaultLabel.PACKET_LOSS, 0.01).values("du0.dl_bitrate")
        severe = faulted(FaultLabel.PACKET_LOSS, 0.05).values("du0.dl_bitrate")
        self.assertLess(severe[500:].mean(), mild[500:].mean())

    def test_schedule_mismatch(self):
        config = self.small_sim_config(duration_s=200)
        baseline = generate_baseline(config, TrafficProfile(), derive_rng(0, "t"))
        short = InjectionSchedule((FaultEpisode(FaultLabel.NORMAL, 0, 100),))
        with self.assertRaises(ScheduleMismatchException):
            apply_faults(baseline, short, config)
        with self.assertRaises(ScheduleMismatchException):
            run_simulation(config, TrafficProfile(), short)


if __name__ == "__main__":
    unittest.main()
