import json

import numpy as np
import pytest

from mirage import BlobStore, MockBackend, VectorStore, build_store, parse_catalog
from mirage.errors import (
    AllRecordsSkipped,
    DuplicateId,
    IngestAborted,
    MissingField,
    ParseError,
)


def write_images(directory, names):
    directory.mkdir(parents=True, exist_ok=True)
    for i, name in enumerate(names):
        # Distinct deterministic bytes per image.
        (directory / name).write_bytes(bytes([i % 256]) * 32 + name.encode())


def make_csv_catalog(tmp_path, rows, header="id,caption,image_path,modality"):
    path = tmp_path / "catalog.csv"
    path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")
    return path


def make_jsonl_catalog(tmp_path, records):
    path = tmp_path / "catalog.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


class TestParseCatalog:
    def test_csv_three_rows(self, tmp_path):
        path = make_csv_catalog(
            tmp_path,
            [
                "a,chest x-ray,images/a.png,X-ray",
                "b,knee mri,images/b.png,MRI",
                "c,lung ct,images/c.png,CT",
            ],
        )
        records = parse_catalog(path)
        assert [r.id for r in records] == ["a", "b", "c"]
        assert records[1].modality == "MRI"

    def test_csv_modality_optional(self, tmp_path):
        path = make_csv_catalog(
            tmp_path, ["a,chest x-ray,images/a.png"], header="id,caption,image_path"
        )
        assert parse_catalog(path)[0].modality == "unknown"

    def test_jsonl_modality_default(self, tmp_path):
        path = make_jsonl_catalog(
            tmp_path, [{"id": "a", "caption": "chest", "image_path": "a.png"}]
        )
        assert parse_catalog(path)[0].modality == "unknown"

    def test_duplicate_id_names_both_lines(self, tmp_path):
        path = make_jsonl_catalog(
            tmp_path,
            [
                {"id": "a", "caption": "one", "image_path": "a.png"},
                {"id": "b", "caption": "two", "image_path": "b.png"},
                {"id": "a", "caption": "three", "image_path": "c.png"},
            ],
        )
        with pytest.raises(DuplicateId) as excinfo:
            parse_catalog(path)
        assert "lines 1 and 3" in str(excinfo.value)

    def test_missing_field(self, tmp_path):
        path = make_jsonl_catalog(tmp_path, [{"id": "a", "caption": "one"}])
        with pytest.raises(MissingField) as excinfo:
            parse_catalog(path)
        assert excinfo.value.line == 1

    def test_missing_header_column(self, tmp_path):
        path = make_csv_catalog(tmp_path, ["a,b"], header="id,caption")
        with pytest.raises(MissingField):
            parse_catalog(path)

    def test_bad_json_line_number(self, tmp_path):
        path = tmp_path / "catalog.jsonl"
        path.write_text('{"id": "a", "caption": "c", "image_path": "p"}\n{broken\n')
        with pytest.raises(ParseError) as excinfo:
            parse_catalog(path)
        assert excinfo.value.line == 2


class TestBuildStore:
    def _catalog(self, tmp_path, n=10):
        names = [f"img_{i}.png" for i in range(n)]
        write_images(tmp_path / "images", names)
        records = [
            {
                "id": f"e{i}",
                "caption": f"caption number {i} with shared tokens",
                "image_path": f"images/{name}",
            }
            for i, name in enumerate(names)
        ]
        return make_jsonl_catalog(tmp_path, records)

    def test_ten_records(self, tmp_path, backend):
        records = parse_catalog(self._catalog(tmp_path))
        store, report = build_store(records, backend, base_dir=tmp_path)
        assert len(store) == 10
        assert report.built == 10
        assert report.skipped == []
        assert report.total_records == 10
        for entry_id in store.ids:
            entry = store.get(entry_id)
            assert not np.array_equal(entry.caption_embedding, entry.image_embedding)

    def test_skip_policy(self, tmp_path, backend):
        records = parse_catalog(self._catalog(tmp_path))
        (tmp_path / "images" / "img_3.png").unlink()
        store, report = build_store(records, backend, base_dir=tmp_path, on_missing_image="skip")
        assert len(store) == 9
        assert len(report.skipped) == 1
        assert report.skipped[0]["id"] == "e3"
        assert report.built + len(report.skipped) == report.total_records

    def test_fail_policy_names_record(self, tmp_path, backend):
        records = parse_catalog(self._catalog(tmp_path))
        (tmp_path / "images" / "img_3.png").unlink()
        with pytest.raises(IngestAborted, match="e3"):
            build_store(records, backend, base_dir=tmp_path, on_missing_image="fail")

    def test_all_skipped(self, tmp_path, backend):
        records = parse_catalog(self._catalog(tmp_path, n=2))
        (tmp_path / "images" / "img_0.png").unlink()
        (tmp_path / "images" / "img_1.png").unlink()
        with pytest.raises(AllRecordsSkipped):
            build_store(records, backend, base_dir=tmp_path)

    def test_empty_records(self, backend):
        with pytest.raises(AllRecordsSkipped):
            build_store([], backend)

    def test_row_order_equals_catalog_order(self, tmp_path, backend):
        records = parse_catalog(self._catalog(tmp_path))
        store, _ = build_store(records, backend, base_dir=tmp_path, batch_size=3)
        assert store.ids == [f"e{i}" for i in range(10)]

    def test_rebuild_is_byte_identical(self, tmp_path, backend):
        records = parse_catalog(self._catalog(tmp_path))
        out_a = tmp_path / "store_a"
        out_b = tmp_path / "store_b"
        for out in (out_a, out_b):
            store, _ = build_store(records, MockBackend(), base_dir=tmp_path)
            store.save_dir(out)
        for name in ("captions.mvec", "images.mvec", "meta.jsonl"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_limit_subsets_and_is_recorded(self, tmp_path, backend):
        records = parse_catalog(self._catalog(tmp_path))
        store, report = build_store(records, backend, base_dir=tmp_path, limit=4)
        assert len(store) == 4
        assert report.limit == 4
        assert report.total_records == 4
        assert report.catalog_records == 10

    def test_blob_store_rewrites_image_ref(self, tmp_path, backend):
        records = parse_catalog(self._catalog(tmp_path, n=3))
        blob_store = BlobStore(tmp_path / "blobs")
        store, report = build_store(
            records, backend, base_dir=tmp_path, blob_store=blob_store
        )
        for entry_id in store.ids:
            ref = store.get(entry_id).image_ref
            assert ref.startswith("blob:")
            blob_id = ref[len("blob:"):]
            data, media_type = blob_store.get(blob_id)
            assert media_type == "image/png"
            assert data  # original bytes stored
        assert set(report.image_sources) == set(store.ids)

    def test_backend_failure_aborts_with_partial_report(self, tmp_path):
        class FlakyBackend(MockBackend):
            def __init__(self):
                self.calls = 0

            def encode_text(self, texts):
                self.calls += 1
                if self.calls > 1:
                    from mirage.errors import BackendUnreachable

                    raise BackendUnreachable("encoder went away")
                return super().encode_text(texts)

        records = parse_catalog(self._catalog(tmp_path))
        with pytest.raises(IngestAborted) as excinfo:
            build_store(records, FlakyBackend(), base_dir=tmp_path, batch_size=4)
        assert excinfo.value.report.built == 4  # first batch landed

    def test_mock_dim_is_64(self, tmp_path, backend):
        records = parse_catalog(self._catalog(tmp_path, n=2))
        store, report = build_store(records, backend, base_dir=tmp_path)
        assert store.dim == 64
        assert report.dim == 64
