#include <doctest.h>

#include <sstream>

#include "ainr/audio.hpp"
#include "ainr/io_util.hpp"
#include "ainr/model_io.hpp"
#include "cli.hpp"
#include "oracles.hpp"

using namespace ainr;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("paramcount") {
  CHECK(run({"paramcount", "--arch", "kan", "--encoding-length", "10"}).out == "33768\n");
  CHECK(run({"paramcount", "--arch", "kan"}).out == "31080\n");
  CHECK(run({"paramcount", "--arch", "kan", "--layers", "24,12,6"}).out == "10500\n");
  CHECK(run({"paramcount", "--arch", "kan", "--scale-spline", "false"}).out == "28860\n");
  CHECK(run({"paramcount", "--arch", "kan", "--grid-size", "17"}).out == "46620\n");
  CHECK(run({"paramcount", "--arch", "siren"}).out == std::to_string(param_count(InrConfig::defaults_for(Arch::siren))) + "\n");
}

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"paramcount", "--arch", "mlp"}).code == 1);
  CHECK(run({"fit", "-i", "x.wav"}).code == 1);
  CHECK(run({"paramcount", "--arch", "kan", "--grid-size", "0"}).code == 1);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("paramcount") != std::string::npos);
}

TEST_CASE("runtime failures exit with 2") {
  const auto r = run({"eval", "-m", "/nonexistent/model.ainr", "-i", "/nonexistent/clip.wav"});
  CHECK(r.code == 2);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("fit then eval reproduces the metrics") {
  const auto dir = oracle::temp_dir("cli_fit");
  AudioClip clip;
  clip.samples = oracle::sine_mixture(2048, 22050.0, {300.0}, {0.5}, {0.0});
  wav_write(dir / "tone.wav", clip);
  const std::string wav = (dir / "tone.wav").string();
  const std::string model = (dir / "tone.ainr").string();
  const auto fit = run({"fit", "-i", wav, "-o", model, "--arch", "kan", "--layers", "8,4", "--steps", "10",
                        "--report", (dir / "fit.csv").string(), "--trace", (dir / "trace.csv").string()});
  REQUIRE(fit.code == 0);
  CHECK(std::filesystem::exists(model));
  auto expected = InrConfig::defaults_for(Arch::kan);
  expected.layers = {8, 4};
  CHECK(load_model(model).param_count() == param_count(expected));
  const auto eval = run({"eval", "-m", model, "-i", wav, "--report", (dir / "eval.csv").string()});
  REQUIRE(eval.code == 0);
  CHECK(eval.out == fit.out);
  CHECK(read_file(dir / "fit.csv") == read_file(dir / "eval.csv"));
  CHECK(read_file(dir / "trace.csv").rfind("step,loss,lr\n", 0) == 0);

  const auto spec = run({"spectrogram", "-i", wav, "-o", (dir / "spec").string(), "--fft", "256", "--hop", "64",
                         "--window", "256"});
  CHECK(spec.code == 0);
  CHECK(std::filesystem::exists(dir / "spec.pgm"));
  CHECK(std::filesystem::exists(dir / "spec.csv"));
}

TEST_CASE("compare on a tiny directory") {
  const auto dir = oracle::temp_dir("cli_compare");
  for (int i = 0; i < 2; ++i) {
    AudioClip c;
    c.samples = oracle::sine_mixture(2048, 22050.0, {200.0 + 100.0 * i}, {0.4}, {0.0});
    wav_write(dir / ("c" + std::to_string(i) + ".wav"), c);
  }
  const auto r = run({"compare", "-d", dir.string(), "-o", (dir / "table.csv").string(), "--clips",
                      (dir / "clips.csv").string(), "--archs", "kan,siren", "--steps", "3", "--layers", "8,4"});
  REQUIRE(r.code == 0);
  const auto table = read_file(dir / "table.csv");
  CHECK(table == r.out);
  CHECK(table.find("\nkan,") != std::string::npos);
  CHECK(table.find("\nsiren,") != std::string::npos);
  CHECK(read_file(dir / "clips.csv").find("mean,kan") != std::string::npos);
}
