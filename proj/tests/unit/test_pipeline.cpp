#include <doctest.h>

#include "dexpush/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dexpush;
namespace fs = std::filesystem;

namespace {

RunManifest tiny_manifest() {
  RunManifest m;
  m.seed = 5;
  m.objects = {shipped_object("low_box")};
  m.directions = {Vec3::UnitX()};
  m.restarts = 2;
  m.iterations = 40;
  m.augment_count = 2;
  return m;
}

std::string dataset_bytes(const GenDataResult& r) {
  std::ostringstream os;
  write_dataset(os, r.dataset, r.objects);
  return os.str();
}

// One generated dataset shared by the tests below.
const GenDataResult& tiny_result() {
  static const GenDataResult r = generate_dataset(tiny_manifest(), 1);
  return r;
}

}  // namespace

TEST_CASE("direction tokens") {
  CHECK(parse_direction("+x").isApprox(Vec3::UnitX()));
  CHECK(parse_direction("-y").isApprox(-Vec3::UnitY()));
  CHECK(parse_direction("90").isApprox(Vec3::UnitY()));
  CHECK(parse_direction("180").isApprox(-Vec3::UnitX()));
  CHECK_THROWS(parse_direction("up"));
  CHECK_THROWS(parse_direction("45deg"));
  CHECK(parse_directions("+x, +y -x").size() == 3);
  CHECK_THROWS(parse_directions(""));
  CHECK(direction_label(Vec3::UnitY()) == "+y");
  CHECK(direction_label(parse_direction("45")) == "45");
}

TEST_CASE("run manifest resolves paths and validates") {
  const fs::path dir = fs::temp_directory_path() / "dexpush_manifest_test";
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "run.manifest");
    os << "seed = 11\nobjects = " << shipped_object("low_box") << " " << shipped_object("cylinder")
       << "\ndirections = +x 90\nrestarts = 3\nout = results\n";
  }
  const RunManifest m = RunManifest::load((dir / "run.manifest").string());
  CHECK(m.seed == 11);
  CHECK(m.objects.size() == 2);
  CHECK(m.directions.size() == 2);
  CHECK(m.optimizer_config().restarts == 3);
  CHECK(m.optimizer_config().iterations == 2000);
  CHECK(fs::path(m.out) == dir / "results");
  CHECK_NOTHROW(m.validate());

  RunManifest bad = m;
  bad.objects.push_back((dir / "missing.object").string());
  CHECK_THROWS(bad.validate());
  bad.objects.clear();
  CHECK_THROWS(bad.validate());
  bad = m;
  bad.directions = {Vec3(0, 0, 1)};
  CHECK_THROWS(bad.validate());

  // The hash follows every setting.
  RunManifest other = m;
  other.seed = 12;
  CHECK(hash_hex(m.canonical_text()) == hash_hex(RunManifest(m).canonical_text()));
  CHECK(hash_hex(m.canonical_text()) != hash_hex(other.canonical_text()));
  fs::remove_all(dir);
}

TEST_CASE("canonical frame turns the push into +x and matches BPS canonicalization") {
  const ObjectModel obj = load_object(shipped_object("l_shape"));
  const Vec3 u = parse_direction("30");
  const Transform3 c = canonical_frame(obj, u);
  CHECK((c.rotation * u).isApprox(Vec3::UnitX()));
  const PointCloud cloud = transformed(obj.cloud, c);
  CHECK(std::abs(cloud.col(0).mean()) < 1e-12);
  CHECK(std::abs(cloud.col(1).mean()) < 1e-12);
  CHECK(std::abs(cloud.col(2).minCoeff()) < 1e-12);
  const BpsEncoding a = canonical_condition(obj, u);
  const BpsEncoding b = encode(default_basis(), cloud);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  // A rigidly moved copy seen from the correspondingly turned direction looks the same.
  Transform3 move;
  move.rotation = rotation_z(0.7);
  move.translation = Vec3(0.3, -0.2, 0.0);
  const BpsEncoding moved = canonical_condition(moved_object(obj, move), move.rotation * u);
  CHECK((moved - a).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gen-data output does not depend on the worker count") {
  const GenDataResult one = tiny_result();
  const GenDataResult three = generate_dataset(tiny_manifest(), 3);
  CHECK(dataset_bytes(one) == dataset_bytes(three));
  REQUIRE(one.summary.size() == 1);
  const PairSummary& s = one.summary.front();
  CHECK(s.error.empty());
  CHECK(s.candidates == 2);
  CHECK(s.records == int(one.dataset.records.size()));
  CHECK(s.records == s.candidates + 2 * s.successes);
  CHECK_THROWS(generate_dataset(RunManifest{}, 1));
}

TEST_CASE("dataset files round trip") {
  const GenDataResult& r = tiny_result();
  const std::string path = (fs::temp_directory_path() / "dexpush_dataset_test.jsonl").string();
  write_dataset(path, r.dataset, r.objects);
  const Dataset back = read_dataset(path);
  CHECK(back.header.seed == 5);
  CHECK(back.header.config_hash == r.dataset.header.config_hash);
  CHECK(back.header.tool_version == kToolVersion);
  CHECK(back.header.objects.at("low_box") == shipped_object("low_box"));
  REQUIRE(back.records.size() == r.dataset.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    const auto &a = r.dataset.records[i], &b = back.records[i];
    CHECK(a.object_id == b.object_id);
    CHECK((encode_pose(a.pose) - encode_pose(b.pose)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(a.energy.total == b.energy.total);
    CHECK(a.energy.e_dir == b.energy.e_dir);
    CHECK(a.outcome.position_error == b.outcome.position_error);
    CHECK(a.outcome.success == b.outcome.success);
    CHECK(a.augmented == b.augmented);
    CHECK(a.source == b.source);
  }
  const auto rows = summarize(back);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].candidates == r.summary[0].candidates);
  CHECK(rows[0].successes == r.summary[0].successes);

  {
    std::ofstream os(path);
    os << "{\"type\":\"other\"}\n";
  }
  CHECK_THROWS(read_dataset(path));
  std::remove(path.c_str());
  CHECK_THROWS(read_dataset(path));
}

TEST_CASE("training samples are canonical and fractions nest") {
  // Hand-made dataset: alternating directions, every fifth record failed.
  const ObjectModel box = load_object(shipped_object("low_box"));
  Dataset d;
  d.header.objects["low_box"] = shipped_object("low_box");
  for (int k = 0; k < 40; ++k) {
    DatasetRecord r;
    r.object_id = "low_box";
    r.u_dir = k % 2 ? Vec3::UnitX() : Vec3::UnitY();
    r.pose.theta = Eigen::VectorXd::Constant(16, 0.01 * k);
    r.pose.wrist.translation = Vec3(-0.1, 0.001 * k, 0.05);
    r.outcome.success = k % 5 != 0;
    d.records.push_back(r);
  }
  const std::map<std::string, ObjectModel> objs{{"low_box", box}};
  const auto all = training_samples(d, objs, 1.0, 3);
  CHECK(all.size() == 32);
  const auto part = training_samples(d, objs, 0.25, 3);
  CHECK(part.size() == 8);
  const auto tiny = training_samples(d, objs, 1e-6, 3);
  CHECK(tiny.size() == 1);
  for (const auto& s : part) {
    bool found = false;
    for (const auto& a : all) found = found || a.pose25 == s.pose25;
    CHECK(found);
  }
  for (const auto& s : all) {
    CHECK(s.pose25.size() == 25);
    CHECK(s.condition.size() == kBpsSize);
    CHECK((s.condition - canonical_condition(box, s.u_dir)).cwiseAbs().maxCoeff() == 0.0);
  }
  const DatasetRecord& r = d.records[1];
  const Eigen::VectorXd expect = encode_pose(transform_pose(canonical_frame(box, r.u_dir), r.pose));
  CHECK((all[0].pose25 - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS(training_samples(d, objs, 0.0, 3));
  CHECK_THROWS(training_samples(d, {}, 1.0, 3));
}

TEST_CASE("bank poses follow the object into the planner frame") {
  const ObjectModel box = load_object(shipped_object("cylinder"));
  HandPose p;
  p.theta = Eigen::VectorXd::Zero(16);
  p.wrist.translation = Vec3(-0.12, 0.01, 0.03);
  const CandidateSource src = bank_source({p});
  Transform3 move;
  move.rotation = rotation_z(-0.4);
  move.translation = Vec3(0.05, 0.02, 0.0);
  const ObjectModel moved = moved_object(box, move);
  const auto out = src(moved, 0);
  REQUIRE(out.size() == 1);
  // Mapping the result back through the moved object's canonical frame gives the bank pose.
  const HandPose back = transform_pose(canonical_frame(moved, Vec3::UnitX()), out[0]);
  CHECK(back.wrist.translation.isApprox(p.wrist.translation, 1e-12));
}

TEST_CASE("ranking and summary CSV layout") {
  Ranking r;
  RankedPose a;
  a.index = 4;
  a.score = -0.25;
  a.l_goal = 0.01;
  a.l_dir = -0.6;
  r.ranked.push_back(a);
  std::ostringstream os;
  write_ranking_csv(os, r);
  CHECK(os.str() == "rank,index,V,l_goal,l_coll,l_dir,success\n1,4,-0.25,0.01,0,-0.6,0\n");
  PairSummary s;
  s.object_id = "box";
  s.candidates = 4;
  s.successes = 1;
  CHECK(s.success_rate() == 0.25);
  std::ostringstream cs;
  write_summary_csv(cs, {s});
  CHECK(cs.str().find("box,1,0,4,1,0,0,0.25") != std::string::npos);
}
