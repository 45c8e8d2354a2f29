import unittest

import numpy as np
from scipy import stats

from oran_fault_cli.exceptions import (
    InvalidRampException,
    ScheduleMismatchException,
    StressOutOfEpisodeException,
)
from oran_fault_cli.injection import (
    FaultEpisode,
    InjectionSchedule,
    StressRamp,
    build_schedule,
    read_schedule_csv,
    sample_assignments,
    sample_duration,
    sample_fault_type,
    stress_at,
    write_schedule_csv,
)
from oran_fault_cli.injection.fault_injector import (
    DEFAULT_LAMBDA_PER_MIN,
    FAULT_TYPE_PROBABILITIES,
    STRESS_RANGES,
    duration_from_uniform,
    fault_type_from_uniform,
    ramp_from_uniforms,
    truncated_mean_minutes,
)
from oran_fault_cli.telemetry import FaultLabel
from oran_fault_cli.utils import derive_rng

from .oran_fault_test_case_mixin import OranFaultTestCaseMixin

CONTAINERS = ("du0", "du1", "du2", "du3", "cu0", "cu1", "cu2", "cu3")


class TestSampling(unittest.TestCase):
    def test_duration_bounds(self):
        self.assertEqual(duration_from_uniform(0.0, DEFAULT_LAMBDA_PER_MIN), 1800)
        self.assertIn(
            duration_from_uniform(1.0 - 1e-12, DEFAULT_LAMBDA_PER_MIN), (5399, 5400)
        )
        self.assertLess(
            duration_from_uniform(0.25, DEFAULT_LAMBDA_PER_MIN),
            duration_from_uniform(0.75, DEFAULT_LAMBDA_PER_MIN),
        )
        with self.assertRaises(ValueError):
            sample_duration(np.random.default_rng(0), 0.0)

    def test_duration_distribution(self):
        rng = derive_rng(1, "test.durations")
        durations = np.array(
            [sample_duration(rng, DEFAULT_LAMBDA_PER_MIN) for _ in range(100_000)]
        )
        self.assertGreaterEqual(durations.min(), 1800)
        self.assertLessEqual(durations.max(), 5400)
        self.assertAlmostEqual(
            durations.mean() / 60.0,
            truncated_mean_minutes(DEFAULT_LAMBDA_PER_MIN),
            delta=0.5,
        )

    def test_truncated_mean_closed_form(self):
        for lambda_per_min in (1.0 / 45.0, 0.01, 0.2):
            width = 60.0
            oracle = stats.truncexpon(
                b=lambda_per_min * width, scale=1.0 / lambda_per_min
            ).mean()
            self.assertAlmostEqual(
                truncated_mean_minutes(lambda_per_min), 30.0 + oracle, places=6
            )

    def test_fault_type_boundaries(self):
        self.assertEqual(fault_type_from_uniform(0.0), FaultLabel.NORMAL)
        self.assertEqual(fault_type_from_uniform(0.2999), FaultLabel.NORMAL)
        self.assertEqual(fault_type_from_uniform(0.3), FaultLabel.CPU_STRESS)
        self.assertEqual(fault_type_from_uniform(0.7999), FaultLabel.CPU_STRESS)
        self.assertEqual(fault_type_from_uniform(0.8), FaultLabel.MEMORY_STRESS)
        self.assertEqual(fault_type_from_uniform(0.9), FaultLabel.PACKET_LOSS)
        self.assertEqual(fault_type_from_uniform(0.99999), FaultLabel.PACKET_LOSS)

    def test_fault_type_distribution(self):
        rng = derive_rng(2, "test.fault_types")
        n = 1_000_000
        draws = np.array([int(sample_fault_type(rng)) for _ in range(n)])
        counts = np.bincount(draws, minlength=4)
        frequencies = counts / n
        np.testing.assert_allclose(frequencies, FAULT_TYPE_PROBABILITIES, atol=0.005)
        _, p_value = stats.chisquare(counts, np.array(FAULT_TYPE_PROBABILITIES) * n)
        self.assertGreater(p_value, 0.01)

    def test_ramp_from_uniforms(self):
        self.assertEqual(
            ramp_from_uniforms(FaultLabel.CPU_STRESS, 0.0, 0.0), StressRamp(0.4, 0.4)
        )
        ramp = ramp_from_uniforms(FaultLabel.MEMORY_STRESS, 1.0, 1.0)
        self.assertAlmostEqual(ramp.start_level, 0.35)
        self.assertAlmostEqual(ramp.end_level, 0.6)
        ramp = ramp_from_uniforms(FaultLabel.PACKET_LOSS, 0.5, 0.5)
        self.assertAlmostEqual(ramp.start_level, 0.02)
        self.assertAlmostEqual(ramp.end_level, 0.035)

    def test_assignments(self):
        rng = derive_rng(3, "test.assignments")
        self.assertEqual(sample_assignments(rng, CONTAINERS, FaultLabel.NORMAL), {})
        # Normal draws nothing
        self.assertEqual(rng.random(), derive_rng(3, "test.assignments").random())

        trials = 20_000
        stressed = 0
        for _ in range(trials):
            assignments = sample_assignments(rng, CONTAINERS, FaultLabel.CPU_STRESS)
            stressed += len(assignments)
            self.assertTrue(set(assignments) <= set(CONTAINERS))
        self.assertAlmostEqual(stressed / (trials * len(CONTAINERS)), 0.4, delta=0.01)

    def test_stress_start_distribution(self):
        for offset, fault_type in enumerate(
            (FaultLabel.CPU_STRESS, FaultLabel.MEMORY_STRESS, FaultLabel.PACKET_LOSS)
        ):
            rng = derive_rng(4 + offset, "test.ramps")
            starts, ends = [], []
            for _ in range(5_000):
                for ramp in sample_assignments(rng, CONTAINERS, fault_type).values():
                    starts.append(ramp.start_level)
                    ends.append(ramp.end_level)
            start_low, start_high, end_high = STRESS_RANGES[fault_type]
            _, p_value = stats.kstest(
                starts, stats.uniform(loc=start_low, scale=start_high - start_low).cdf
            )
            self.assertGreater(p_value, 0.01, fault_type)
            self.assertTrue(np.all(np.array(ends) >= np.array(starts)))
            self.assertLessEqual(max(ends), end_high)


class TestSchedule(OranFaultTestCaseMixin, unittest.TestCase):
    def test_clipped_single_episode(self):
        for seed in range(5):
            schedule = build_schedule(derive_rng(seed, "injector"), CONTAINERS, 1800)
            self.assertEqual(len(schedule.episodes), 1)
            self.assertEqual(schedule.episodes[0].duration_s, 1800)

    def test_tiling_and_determinism(self):
        schedule = build_schedule(derive_rng(5, "injector"), CONTAINERS, 50_000)
        again = build_schedule(derive_rng(5, "injector"), CONTAINERS, 50_000)
        self.assertEqual(schedule, again)
        self.assertEqual(
            sum(episode.duration_s for episode in schedule.episodes), 50_000
        )
        self.assertEqual(schedule.total_duration_s, 50_000)
        for previous, episode in zip(schedule.episodes, schedule.episodes[1:]):
            self.assertEqual(previous.end_s, episode.start_s)
        for episode in schedule.episodes[:-1]:
            self.assertGreaterEqual(episode.duration_s, 1800)
            self.assertLessEqual(episode.duration_s, 5400)
        self.assertNotEqual(
            build_schedule(derive_rng(6, "injector"), CONTAINERS, 50_000), schedule
        )

    def test_label_mass(self):
        schedule = build_schedule(derive_rng(8, "injector"), CONTAINERS, 1_700_000)
        self.assertGreater(len(schedule.episodes), 400)
        histogram = schedule.label_histogram()
        self.assertEqual(histogram.sum(), 1_700_000)
        normal, cpu, memory, loss = histogram
        self.assertGreater(cpu, normal)
        self.assertGreater(normal, memory)
        self.assertGreater(normal, loss)
        np.testing.assert_array_equal(
            np.bincount(schedule.labels(), minlength=4), histogram
        )

    def test_labels(self):
        ramp = StressRamp(0.5, 0.7)
        schedule = InjectionSchedule(
            (
                FaultEpisode(FaultLabel.CPU_STRESS, 0, 10, {"du0": ramp}),
                FaultEpisode(FaultLabel.MEMORY_STRESS, 10, 5),
                FaultEpisode(FaultLabel.NORMAL, 15, 5),
            )
        )
        labels = schedule.labels()
        np.testing.assert_array_equal(labels[:10], [1] * 10)
        # A stress episode without any stressed container looks normal
        np.testing.assert_array_equal(labels[10:], [0] * 10)
        self.assertEqual(schedule.label_at(9), FaultLabel.CPU_STRESS)
        self.assertEqual(schedule.episode_at(12).fault_type, FaultLabel.MEMORY_STRESS)
        with self.assertRaises(ScheduleMismatchException):
            schedule.episode_at(20)

        stress = schedule.stress_matrix(["du0", "cu0"], FaultLabel.CPU_STRESS)
        self.assertEqual(stress.shape, (2, 20))
        self.assertAlmostEqual(stress[0, 0], 0.5)
        self.assertAlmostEqual(stress[0, 5], 0.6)
        self.assertEqual(stress[0, 10:].sum(), 0.0)
        self.assertEqual(stress[1].sum(), 0.0)

    def test_invalid_episodes(self):
        with self.assertRaises(InvalidRampException):
            StressRamp(0.6, 0.5)
        with self.assertRaises(InvalidRampException):
            StressRamp(0.5, 1.2)
        with self.assertRaises(InvalidRampException):
            FaultEpisode(FaultLabel.CPU_STRESS, 0, 0)
        with self.assertRaises(InvalidRampException):
            FaultEpisode(FaultLabel.NORMAL, 0, 10, {"du0": StressRamp(0.1, 0.2)})
        with self.assertRaises(ScheduleMismatchException):
            InjectionSchedule(
                (
                    FaultEpisode(FaultLabel.NORMAL, 0, 10),
                    FaultEpisode(FaultLabel.NORMAL, 11, 10),
                )
            )

    def test_stress_at(self):
        episode = FaultEpisode(
            FaultLabel.CPU_STRESS, 100, 50, {"du0": StressRamp(0.4, 0.8)}
        )
        self.assertEqual(stress_at(episode, "du0", 100), 0.4)
        self.assertAlmostEqual(stress_at(episode, "du0", 125), 0.6)
        self.assertEqual(episode.stress_at("cu0", 125), 0.0)
        with self.assertRaises(StressOutOfEpisodeException):
            stress_at(episode, "du0", 150)
        with self.assertRaises(StressOutOfEpisodeException):
            stress_at(episode, "du0", 99)
        profile = episode.stress_profile("du0")
        self.assertEqual(profile.shape, (50,))
        self.assertAlmostEqual(profile[25], stress_at(episode, "du0", 125))

    def test_write_read_schedule(self):
        schedule = build_schedule(derive_rng(9, "injector"), CONTAINERS, 40_000)
        path = self.tmp_path("schedule.csv")
        write_schedule_csv(schedule, path)
        self.assertEqual(read_schedule_csv(path), schedule)


if __name__ == "__main__":
    unittest.main()
