#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>

#include "cohofrac/frame_protocol.hpp"
#include "cohofrac/raycaster.hpp"
#include "support.hpp"

using namespace cohofrac;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun cli(const std::string& args) {
  const std::string cmd = std::string("'") + COHOFRAC_CLI + "' " + args + " 2>/dev/null";
  CliRun r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return "'" + testing_support::data_path(name) + "'"; }

class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cohofrac-cli-" + std::to_string(::getpid()) + "-" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
    return "'" + path(name) + "'";
  }

  fs::path dir_;
};

// Drops the trailing shapes/weights lines of a bundled file.
std::string without_shapes(const std::string& manifold) {
  std::istringstream in(testing_support::data_text(manifold));
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("shapes", 0) != 0) out += line + "\n";
  return out;
}

}  // namespace

TEST(Cli, InfoOnTheFigureEight) {
  const CliRun r = cli("info " + data("m004.tri"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("tetrahedra 2\n"), std::string::npos);
  EXPECT_NE(r.out.find("cusps 1\n"), std::string::npos);
  EXPECT_NE(r.out.find("h1_rank 1\n"), std::string::npos);
  EXPECT_NE(r.out.find("weights seifert cocycle\n"), std::string::npos);
  EXPECT_NE(r.out.find("volume 2.029883212819\n"), std::string::npos);
}

TEST(Cli, InfoReportsTorsion) {
  const CliRun r = cli("info " + data("m003.tri"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("h1_torsion 5\n"), std::string::npos);
}

TEST_F(Scratch, InfoWithoutShapes) {
  const CliRun r = cli("info " + write("bare.tri", without_shapes("m004")));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("shapes: unsolved (run solve)\n"), std::string::npos);
}

TEST_F(Scratch, MalformedFileExitsTwo) {
  EXPECT_EQ(cli("info " + write("bad.tri", "tri 1\ntetrahedra 1\ntet 0 neighbors 0 0 0\n")).code, 2);
  EXPECT_EQ(cli("info '" + path("missing.tri") + "'").code, 2);
}

TEST_F(Scratch, SolveWritesTheShapesLine) {
  const std::string bare = write("bare.tri", without_shapes("m004"));
  CliRun r = cli("solve " + bare);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("shapes 0.500000000000000 0.866025403784439 0.500000000000000 0.866025403784439\n"),
            std::string::npos)
      << r.out;
  EXPECT_EQ(cli("solve " + bare + " -o '" + path("solved.tri") + "'").code, 0);
  EXPECT_EQ(testing_support::read_text(path("solved.tri")), r.out);
  // Already solved: unchanged.
  const CliRun again = cli("solve '" + path("solved.tri") + "'");
  EXPECT_EQ(again.code, 0);
  const ManifoldFile a = parse_manifold_file(r.out), b = parse_manifold_file(again.out);
  for (std::size_t i = 0; i < a.shapes->size(); ++i) EXPECT_LT(std::abs((*a.shapes)[i] - (*b.shapes)[i]), 1e-12);
}

TEST_F(Scratch, BrokenGluingExitsTwoBeforeSolving) {
  std::string text = without_shapes("m004");
  text.replace(text.find("gluings 0132 1230"), 17, "gluings 0123 1230");
  EXPECT_EQ(cli("solve " + write("broken.tri", text)).code, 2);
}

TEST(Cli, HomologyPrintsCocycleGenerators) {
  CliRun r = cli("homology " + data("m004.tri"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("rank 1\n", 0), 0u);
  const std::regex line("weights gen0 (-?\\d+) (-?\\d+) (-?\\d+) (-?\\d+)\n");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(r.out, m, line)) << r.out;
  FaceWeights w;
  for (int i = 1; i <= 4; ++i) w.values.push_back(std::stoll(m[i]));
  EXPECT_TRUE(is_cocycle(testing_support::data_file("m004").triangulation, w).is_cocycle);

  r = cli("homology " + data("m129.tri"));
  EXPECT_NE(r.out.find("rank 2\n"), std::string::npos);
  EXPECT_NE(r.out.find("weights gen0 "), std::string::npos);
  EXPECT_NE(r.out.find("weights gen1 "), std::string::npos);

  r = cli("homology " + data("m003.tri"));
  EXPECT_NE(r.out.find("torsion 5\n"), std::string::npos);
}

TEST(Cli, ProbeTinyRadius) {
  const CliRun r = cli("probe " + data("m004.tri") + " --radius 0.01");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "# step face_class sign t_exit weight distance\nweight 0\ncrossings 0\ndistance " + format_real(0.01) + "\n");
}

TEST(Cli, ProbeMatchesTraceRay) {
  const CliRun r = cli("probe " + data("m004.tri") + " --radius 5 --direction 0.3,-0.2,1");
  ASSERT_EQ(r.code, 0);
  const auto& m = testing_support::loaded("m004");
  const Camera cam = default_camera(m.scene);
  RenderParams p;
  p.radius = 5;
  const Vec4 dir = normalize_tangent(cam.eye(), cam.frame * Vec4(0, 0.3, -0.2, 1));
  const TraceResult t = trace_ray(cam, dir, p, m.scene, testing_support::seifert());
  EXPECT_NE(r.out.find("\nweight " + std::to_string(t.weight) + "\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\ncrossings " + std::to_string(t.steps) + "\n"), std::string::npos);
  // One row per crossing, running weight in column five.
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  long long last = 0;
  while (std::getline(in, line) && std::isdigit(static_cast<unsigned char>(line[0]))) {
    std::istringstream row(line);
    std::string step, cls, sign, t_exit, weight;
    row >> step >> cls >> sign >> t_exit >> weight;
    EXPECT_EQ(std::stoi(step), ++rows);
    EXPECT_TRUE(sign == "+1" || sign == "-1");
    last = std::stoll(weight);
  }
  EXPECT_EQ(rows, t.steps);
  EXPECT_EQ(last, t.weight);
}

TEST(Cli, ProbeReversalNegates) {
  // Forward ray, then the reconstructed backward ray from its end.
  const auto& m = testing_support::loaded("m004");
  const Camera cam = default_camera(m.scene);
  const Vec4 dir = normalize_tangent(cam.eye(), cam.frame * Vec4(0, 0.3, -0.2, 1));
  RenderParams p;
  p.radius = 5;
  const TraceResult there = trace_ray(cam, dir, p, m.scene, testing_support::seifert());
  // The end state becomes a camera looking back the way the ray came:
  // Gram-Schmidt on (eye, forward, seeds), then reorder to right/up/forward.
  Mat4 seeds;
  seeds << there.end.point, -there.end.dir, Vec4(0, 1, 0, 0), Vec4(0, 0, 1, 0);
  const Mat4 g = orthonormalize_frame(seeds);
  Camera back{there.end.tet, Mat4()};
  back.frame << g.col(0), g.col(2), g.col(3), g.col(1);
  std::string matrix;
  const auto a = to_row_major(back.frame);
  for (int i = 0; i < 16; ++i) matrix += (i ? "," : "") + protocol::detail::format_double(a[i]);
  const CliRun r = cli("probe " + data("m004.tri") + " --radius 5 --direction 0,0,1 --cam-tet " +
                    std::to_string(back.tet) + " --cam-matrix " + matrix);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("\nweight " + std::to_string(-there.weight) + "\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\ncrossings " + std::to_string(there.steps) + "\n"), std::string::npos) << r.out;
}

TEST_F(Scratch, RenderIsDeterministicAcrossRunsAndWorkers) {
  const std::string a = path("a.ppm"), b = path("b.ppm"), c = path("c.ppm");
  ASSERT_EQ(cli("render " + data("m004.tri") + " --width 64 --height 64 --out '" + a + "' --workers 1").code, 0);
  ASSERT_EQ(cli("render " + data("m004.tri") + " --width 64 --height 64 --out '" + b + "' --workers 8").code, 0);
  ASSERT_EQ(cli("render " + data("m004.tri") + " --width 64 --height 64 --out '" + c + "' --workers 8").code, 0);
  const std::string bytes = testing_support::read_text(a);
  EXPECT_EQ(bytes.substr(0, 13), "P6\n64 64\n255\n");
  EXPECT_EQ(bytes.size(), 13u + 64 * 64 * 3);
  EXPECT_EQ(bytes, testing_support::read_text(b));
  EXPECT_EQ(bytes, testing_support::read_text(c));
}

TEST_F(Scratch, RenderSweepWritesOneImagePerRadius) {
  const std::string out = path("fig5.ppm");
  ASSERT_EQ(cli("render " + data("m004.tri") + " --width 32 --height 32 --radius e1,e2,e3 --out '" + out + "'").code, 0);
  for (const char* k : {"e1", "e2", "e3"}) EXPECT_TRUE(fs::exists(path(std::string("fig5-") + k + ".ppm"))) << k;
}

TEST_F(Scratch, RenderUsageErrors) {
  const std::string out = " --out '" + path("x.ppm") + "'";
  EXPECT_EQ(cli("render " + data("m004.tri") + " --radius 0.0" + out).code, 1);
  EXPECT_EQ(cli("render " + data("m004.tri") + " --radius -2" + out).code, 1);
  EXPECT_EQ(cli("render " + data("m004.tri") + " --fov 5" + out).code, 1);
  EXPECT_EQ(cli("render " + data("m004.tri") + " --supersample 4" + out).code, 1);
  EXPECT_EQ(cli("render " + data("m004.tri") + " --colormap plasma" + out).code, 1);
  EXPECT_EQ(cli("render " + data("m004.tri") + " --weights gen7" + out).code, 1);
  EXPECT_EQ(cli("render " + data("m004.tri") + " --width 2x" + out).code, 1);
  EXPECT_EQ(cli("bogus").code, 1);
  EXPECT_EQ(cli("").code, 1);
  EXPECT_FALSE(fs::exists(path("x.ppm")));
}

TEST(Cli, NonIsometricCameraIsAValidationError) {
  EXPECT_EQ(cli("probe " + data("m004.tri") + " --cam-matrix 2,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1").code, 2);
}
