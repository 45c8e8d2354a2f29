import unittest

from oran_fault_cli.exceptions import DatasetIOException, UnknownMetricException
from oran_fault_cli.telemetry import (
    MetricDescriptor,
    NodeKind,
    TelemetryLevel,
    build_default_schema,
    read_schema,
    schema_from_preset,
    write_schema,
)
from oran_fault_cli.telemetry.schema import RAN_METRICS

from .oran_fault_test_case_mixin import OranFaultTestCaseMixin


class TestSchema(OranFaultTestCaseMixin, unittest.TestCase):
    def test_column_counts(self):
        self.assertEqual(schema_from_preset("default", 4).n_features, 268)
        self.assertEqual(schema_from_preset("testbed", 4).n_features, 403)
        self.assertEqual(self.small_schema().n_features, 12)
        self.assertEqual(
            schema_from_preset("custom", 2, 3, 5).n_features, 9 * 2 + 4 * 3 + 5
        )
        with self.assertRaises(ValueError):
            schema_from_preset("huge", 4)
        with self.assertRaises(ValueError):
            build_default_schema(0, 1, 1, 1)

    def test_feature_order(self):
        schema = schema_from_preset("default", 4)
        order = schema.feature_order
        self.assertEqual(len(set(order)), len(order))
        self.assertEqual(order[0], "du0.n_active_ues")
        self.assertEqual(order[len(RAN_METRICS)], "du1.n_active_ues")
        self.assertEqual(order[36], "du0.cpu_usage")
        self.assertEqual(order[-1], "host.entropy_avail")
        self.assertEqual(schema.index_of("du0.n_active_ues"), 0)
        self.assertEqual(schema.column_index("host", "temperature"), 36 + 192 + 29)

        # Padding only when the catalog runs out
        testbed = schema_from_preset("testbed", 4)
        self.assertTrue(testbed.has_column("du0", "cadvisor_extra_16"))
        self.assertFalse(testbed.has_column("du0", "cadvisor_extra_17"))
        self.assertFalse(testbed.has_column("host", "node_extra_00"))

    def test_partitions(self):
        schema = schema_from_preset("default", 4)
        ran = schema.columns_for_level(TelemetryLevel.RAN)
        platform = schema.columns_for_level(TelemetryLevel.PLATFORM)
        infrastructure = schema.columns_for_level(TelemetryLevel.INFRASTRUCTURE)
        self.assertEqual((len(ran), len(platform), len(infrastructure)), (36, 192, 40))
        self.assertEqual(
            sorted(ran + platform + infrastructure), list(range(schema.n_features))
        )
        self.assertEqual(schema.du_ids, ("du0", "du1", "du2", "du3"))
        self.assertEqual(schema.cu_ids, ("cu0", "cu1", "cu2", "cu3"))
        self.assertEqual(
            schema.containers, ("du0", "du1", "du2", "du3", "cu0", "cu1", "cu2", "cu3")
        )
        for index in ran:
            self.assertEqual(schema.metrics[index].cadence_ms, 100)
            self.assertEqual(schema.metrics[index].node_kind, NodeKind.DU)
        for index in platform + infrastructure:
            self.assertEqual(schema.metrics[index].cadence_ms, 1000)

    def test_unknown_metric(self):
        schema = self.small_schema()
        with self.assertRaises(UnknownMetricException):
            schema.index_of("du9.cqi")
        self.assertFalse(schema.has_column("du9", "cqi"))

    def test_descriptor(self):
        descriptor = MetricDescriptor(
            "du0.cqi", TelemetryLevel.RAN, NodeKind.DU, "index", 100
        )
        self.assertEqual(descriptor.node_id, "du0")
        self.assertEqual(descriptor.metric, "cqi")
        self.assertEqual(MetricDescriptor.from_line(descriptor.to_line()), descriptor)
        with self.assertRaises(ValueError):
            MetricDescriptor("cqi", TelemetryLevel.RAN, NodeKind.DU, "index", 100)
        with self.assertRaises(ValueError):
            # RAN metrics are sampled every 100 ms
            MetricDescriptor("du0.cqi", TelemetryLevel.RAN, NodeKind.DU, "index", 1000)

    def test_write_read_schema(self):
        schema = schema_from_preset("testbed", 2)
        path = self.tmp_path("schema.txt")
        write_schema(schema, path)
        loaded = read_schema(path)
        self.assertEqual(loaded.feature_order, schema.feature_order)
        self.assertEqual(loaded.metrics, schema.metrics)

        broken = self.write_text("broken.txt", "du0.cqi,ran,du,index\n")
        with self.assertRaisesRegex(DatasetIOException, "line 1"):
            read_schema(broken)
        with self.assertRaises(DatasetIOException):
            read_schema(self.tmp_path("missing.txt"))

        with open(path, "r", encoding="utf-8") as f:
            first_line = f.readline()
        duplicated = self.write_text("duplicated.txt", first_line * 2)
        with self.assertRaisesRegex(DatasetIOException, "unique"):
            read_schema(duplicated)
        undecodable = self.tmp_path("latin1.txt")
        with open(undecodable, "wb") as f:
            f.write(b"du0.cqi\xff\n")
        with self.assertRaises(DatasetIOException):
            read_schema(undecodable)


if __name__ == "__main__":
    unittest.main()
