import numpy as np
import pytest
from PIL import Image

from vjig.cli import main
from vjig.dataset_io import read_manifest, read_perm_file, read_report_file, read_shard, shard_paths
from vjig.errors import EXIT_CAPACITY, EXIT_QUALITY, EXIT_USAGE, EXIT_VERIFY
from vjig.rng import substream


def write_frames(root, n_videos=3, n_frames=12, size=(240, 260)):
    """Synthetic PNG frame tree plus a tuple list covering it."""
    frames = root / "frames"
    rng = substream(99, "frames")
    lines = []
    for v in range(n_videos):
        (frames / f"vid{v}").mkdir(parents=True, exist_ok=True)
        refs = []
        for f in range(n_frames):
            ref = f"vid{v}/f{f:03d}.png"
            pixels = rng.integers(0, 256, (*size, 3), dtype=np.uint8)
            Image.fromarray(pixels).save(frames / ref)
            refs.append(ref)
        lines.append(f"vid{v} " + " ".join(refs))
    tuples = root / "tuples.txt"
    tuples.write_text("\n".join(lines) + "\n")
    return frames, tuples


@pytest.fixture(scope="module")
def dataset_env(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    frames, tuples = write_frames(root)
    perms = root / "perms.txt"
    assert main(["perms", "--mode", "sp", "--n", "10", "--np", "4", "--nf", "3", "--seed", "7", "--out", str(perms)]) == 0
    return root, frames, tuples, perms


class TestPerms:
    def test_spatial_writes_files(self, tmp_path):
        out = tmp_path / "p.txt"
        rc = main(["perms", "--mode", "sp", "--n", "8", "--np", "2", "--nf", "2", "--seed", "1", "--out", str(out)])
        assert rc == 0
        ps = read_perm_file(out)
        assert ps.n_rows == 8 and ps.length == 4
        report = read_report_file(out.with_name(out.name + ".report"))
        assert len(report.per_step_best_distance) == 7

    def test_capacity_exit_code(self, tmp_path, capsys):
        rc = main(["perms", "--mode", "sp", "--n", "10", "--np", "2", "--nf", "2", "--seed", "1", "--out", str(tmp_path / "p.txt")])
        assert rc == EXIT_CAPACITY
        assert "8" in capsys.readouterr().err  # surfaced space size

    def test_orig_exact_derangement(self, tmp_path):
        out = tmp_path / "p.txt"
        rc = main(["perms", "--mode", "orig", "--n", "2", "--len", "3", "--exact", "--seed", "1", "--out", str(out)])
        assert rc == 0
        report = read_report_file(out.with_name(out.name + ".report"))
        assert report.step_sums() == (3,)

    def test_orig_pool(self, tmp_path):
        out = tmp_path / "p.txt"
        rc = main(["perms", "--mode", "orig", "--n", "5", "--len", "6", "--pool-size", "200", "--seed", "2", "--out", str(out)])
        assert rc == 0
        assert read_perm_file(out).n_rows == 5

    def test_seed_required(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["perms", "--mode", "sp", "--n", "2", "--out", str(tmp_path / "p.txt")])
        assert exc.value.code == EXIT_USAGE

    def test_len_rejected_for_spatial_mode(self, tmp_path):
        rc = main(["perms", "--mode", "sp", "--n", "2", "--len", "4", "--seed", "1", "--out", str(tmp_path / "p.txt")])
        assert rc == EXIT_USAGE


class TestStats:
    def test_prints_summary(self, dataset_env, capsys):
        _, _, _, perms = dataset_env
        assert main(["stats", "--perm-file", str(perms)]) == 0
        out = capsys.readouterr().out
        assert "min pairwise Hamming" in out and "10 rows" in out


class TestBuildVerify:
    def test_build_then_verify(self, dataset_env, tmp_path):
        root, frames, tuples, perms = dataset_env
        out = tmp_path / "out"
        rc = main(["build", "--tuples", str(tuples), "--frames-dir", str(frames), "--perm-file", str(perms),
                   "--out", str(out), "--seed", "42"])
        assert rc == 0
        manifest = read_manifest(out / "manifest.txt")
        assert len(manifest.built_ids()) == 3
        assert main(["verify", "--perm-file", str(perms), "--out", str(out)]) == 0

    def test_rerun_is_byte_identical(self, dataset_env, tmp_path):
        root, frames, tuples, perms = dataset_env
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["build", "--tuples", str(tuples), "--frames-dir", str(frames), "--perm-file", str(perms),
                         "--out", str(out), "--seed", "42"]) == 0
            outs.append(out)
        shards_a, shards_b = shard_paths(outs[0]), shard_paths(outs[1])
        assert [p.name for p in shards_a] == [p.name for p in shards_b]
        for pa, pb in zip(shards_a, shards_b):
            assert pa.read_bytes() == pb.read_bytes()
        assert (outs[0] / "manifest.txt").read_bytes() == (outs[1] / "manifest.txt").read_bytes()

    def test_workers_do_not_change_output(self, dataset_env, tmp_path):
        root, frames, tuples, perms = dataset_env
        outs = []
        for name, workers in (("w1", "1"), ("w3", "3")):
            out = tmp_path / name
            assert main(["build", "--tuples", str(tuples), "--frames-dir", str(frames), "--perm-file", str(perms),
                         "--out", str(out), "--seed", "42", "--workers", workers]) == 0
            outs.append(out)
        for pa, pb in zip(shard_paths(outs[0]), shard_paths(outs[1])):
            assert pa.read_bytes() == pb.read_bytes()

    def test_epoch_changes_labels_only(self, dataset_env, tmp_path):
        root, frames, tuples, perms = dataset_env
        labels = {}
        for epoch in ("0", "1"):
            out = tmp_path / f"e{epoch}"
            assert main(["build", "--tuples", str(tuples), "--frames-dir", str(frames), "--perm-file", str(perms),
                         "--out", str(out), "--seed", "42", "--epoch", epoch]) == 0
            records = [r for p in shard_paths(out) for r in read_shard(p)]
            labels[epoch] = [r.label for r in records]
            assert main(["verify", "--perm-file", str(perms), "--out", str(out)]) == 0
        assert labels["0"] != labels["1"]

    def test_quadruple_regime_expands_four_per_line(self, dataset_env, tmp_path):
        root, frames, tuples, perms = dataset_env
        quad = tmp_path / "quads.txt"
        quad.write_text("vid0 " + " ".join(f"vid0/f{i:03d}.png" for i in (0, 3, 6, 9)) + "\n")
        out = tmp_path / "out"
        rc = main(["build", "--tuples", str(quad), "--frames-dir", str(frames), "--perm-file", str(perms),
                   "--out", str(out), "--seed", "1", "--regime", "quadruple"])
        assert rc == 0
        manifest = read_manifest(out / "manifest.txt")
        assert len(manifest.built_ids()) == 4
        assert main(["verify", "--perm-file", str(perms), "--out", str(out)]) == 0

    def test_short_video_skip_counts_and_threshold(self, dataset_env, tmp_path, capsys):
        root, frames, tuples, perms = dataset_env
        mixed = tmp_path / "mixed.txt"
        mixed.write_text(
            tuples.read_text() + "vidshort " + " ".join(f"vid0/f{i:03d}.png" for i in range(4)) + "\n"
        )
        out = tmp_path / "out"
        rc = main(["build", "--tuples", str(mixed), "--frames-dir", str(frames), "--perm-file", str(perms),
                   "--out", str(out), "--seed", "1"])
        assert rc == EXIT_QUALITY  # 1 of 4 skipped > default 1%
        manifest = read_manifest(out / "manifest.txt")
        assert len(manifest.skipped()) == 1
        assert "out of range" in manifest.skipped()[0].reason
        rc = main(["build", "--tuples", str(mixed), "--frames-dir", str(frames), "--perm-file", str(perms),
                   "--out", str(tmp_path / "out2"), "--seed", "1", "--max-skip-frac", "0.5"])
        assert rc == 0

    def test_corrupt_frame_skipped(self, dataset_env, tmp_path):
        root, frames, tuples, perms = dataset_env
        bad_dir = tmp_path / "frames"
        bad_dir.mkdir()
        import shutil

        shutil.copytree(frames, bad_dir, dirs_exist_ok=True)
        (bad_dir / "vid1" / "f004.png").write_bytes(b"not a png")
        out = tmp_path / "out"
        rc = main(["build", "--tuples", str(tuples), "--frames-dir", str(bad_dir), "--perm-file", str(perms),
                   "--out", str(out), "--seed", "1", "--max-skip-frac", "0.9"])
        assert rc == 0
        manifest = read_manifest(out / "manifest.txt")
        assert len(manifest.skipped()) == 1
        assert "unreadable" in manifest.skipped()[0].reason

    def test_missing_perm_file_is_usage_error(self, dataset_env, tmp_path):
        root, frames, tuples, _ = dataset_env
        rc = main(["build", "--tuples", str(tuples), "--frames-dir", str(frames),
                   "--perm-file", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "out"), "--seed", "1"])
        assert rc == EXIT_USAGE

    def test_verify_against_wrong_perms_fails(self, dataset_env, tmp_path):
        root, frames, tuples, perms = dataset_env
        out = tmp_path / "out"
        assert main(["build", "--tuples", str(tuples), "--frames-dir", str(frames), "--perm-file", str(perms),
                     "--out", str(out), "--seed", "3"]) == 0
        other = tmp_path / "other.txt"
        assert main(["perms", "--mode", "sp", "--n", "10", "--np", "4", "--nf", "3", "--seed", "8", "--out", str(other)]) == 0
        rc = main(["verify", "--perm-file", str(other), "--out", str(out)])
        assert rc == EXIT_VERIFY

    def test_tampered_shard_fails_verify(self, dataset_env, tmp_path):
        root, frames, tuples, perms = dataset_env
        out = tmp_path / "out"
        assert main(["build", "--tuples", str(tuples), "--frames-dir", str(frames), "--perm-file", str(perms),
                     "--out", str(out), "--seed", "5"]) == 0
        shard = shard_paths(out)[0]
        data = bytearray(shard.read_bytes())
        data[len(data) // 2] ^= 0x01
        shard.write_bytes(bytes(data))
        rc = main(["verify", "--perm-file", str(perms), "--out", str(out)])
        assert rc != 0

    def test_raw8_encoding_and_png_export(self, dataset_env, tmp_path):
        root, frames, tuples, perms = dataset_env
        out = tmp_path / "out"
        rc = main(["build", "--tuples", str(tuples), "--frames-dir", str(frames), "--perm-file", str(perms),
                   "--out", str(out), "--seed", "2", "--encoding", "raw8", "--export-png"])
        assert rc == 0
        records = read_shard(shard_paths(out)[0])
        assert records[0].patches[0].pixels.dtype == np.uint8
        assert any((out / "png").iterdir())
        assert main(["verify", "--perm-file", str(perms), "--out", str(out)]) == 0


class TestExitCodes:
    def test_malformed_perm_file_is_format_error(self, tmp_path):
        from vjig.errors import EXIT_FORMAT

        bad = tmp_path / "bad.txt"
        bad.write_text("this is not a permutation file\n")
        assert main(["stats", "--perm-file", str(bad)]) == EXIT_FORMAT

    def test_grid_perm_mismatch_is_usage_error(self, dataset_env, tmp_path):
        root, frames, tuples, _ = dataset_env
        small = tmp_path / "small.txt"
        assert main(["perms", "--mode", "sp", "--n", "4", "--np", "2", "--nf", "3", "--seed", "1", "--out", str(small)]) == 0
        rc = main(["build", "--tuples", str(tuples), "--frames-dir", str(frames), "--perm-file", str(small),
                   "--out", str(tmp_path / "out"), "--seed", "1"])
        assert rc == EXIT_USAGE


class TestGrayScope:
    def test_frame_scope_builds_and_verifies(self, dataset_env, tmp_path):
        root, frames, tuples, perms = dataset_env
        out = tmp_path / "out"
        rc = main(["build", "--tuples", str(tuples), "--frames-dir", str(frames), "--perm-file", str(perms),
                   "--out", str(out), "--seed", "6", "--gray-scope", "frame", "--gray-prob", "1.0",
                   "--encoding", "raw8"])
        assert rc == 0
        records = [r for p in shard_paths(out) for r in read_shard(p)]
        for rec in records:
            for p in rec.patches:
                assert (p.pixels[:, :, 0] == p.pixels[:, :, 1]).all()
        assert main(["verify", "--perm-file", str(perms), "--out", str(out)]) == 0

    def test_scopes_differ(self, dataset_env, tmp_path):
        root, frames, tuples, perms = dataset_env
        outs = {}
        for scope in ("tuple", "frame"):
            out = tmp_path / scope
            assert main(["build", "--tuples", str(tuples), "--frames-dir", str(frames), "--perm-file", str(perms),
                         "--out", str(out), "--seed", "6", "--gray-scope", scope]) == 0
            outs[scope] = b"".join(p.read_bytes() for p in shard_paths(out))
        assert outs["tuple"] != outs["frame"]


class TestBench:
    def test_table_rows_and_summary(self, capsys):
        rc = main(["bench", "--n", "6", "--np", "2", "--nf", "2", "--seed", "0", "--seeds", "2",
                   "--pool-size", "50"])
        assert rc == 0
        out = capsys.readouterr().out
        body = [line for line in out.splitlines() if line.startswith(("spatial", "unconstrained"))]
        assert len(body) == 2 * 2  # seeds x modes
        assert "ratio" in out
