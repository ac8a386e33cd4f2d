#include <doctest.h>

#include "ainr/error.hpp"
#include "ainr/io_util.hpp"
#include "ainr/model_io.hpp"
#include "oracles.hpp"

using namespace ainr;

TEST_CASE("model roundtrip is bitwise for every architecture") {
  for (Arch a : kAllArchs) {
    auto c = InrConfig::defaults_for(a);
    c.seed = 42;
    auto m = InrModel::build(c);
    const auto bytes = encode_model(m);
    CHECK(bytes.size() == model_file_size(c));
    CHECK(peek_kind(bytes) == FileKind::model);
    auto back = decode_model(bytes);
    CHECK(back.config() == m.config());
    CHECK(back.flatten() == m.flatten());
    CHECK(encode_model(back) == bytes);
    const auto t = time_grid(100);
    CHECK(back.render(t) == m.render(t));
  }
}

TEST_CASE("base KAN file size") {
  const auto c = InrConfig::defaults_for(Arch::kan);
  // header 9, config 4 + 3*8 + 11*8 + 1, count 8, values, crc 4
  CHECK(model_file_size(c) == 9 + 117 + 8 + 8 * 31080 + 4);
}

TEST_CASE("corrupted files are rejected") {
  auto m = InrModel::build(InrConfig::defaults_for(Arch::siren));
  const auto bytes = encode_model(m);
  CHECK_THROWS_AS(decode_model(bytes.substr(0, bytes.size() - 1)), ParseError);
  CHECK_THROWS_AS(decode_model(bytes.substr(0, 20)), ParseError);
  CHECK_THROWS_AS(decode_model(""), ParseError);
  auto flipped = bytes;
  flipped[200] ^= 0x01;
  CHECK_THROWS_AS(decode_model(flipped), ParseError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_model(magic), ParseError);
  CHECK_THROWS_AS(decode_state(bytes), ParseError);
}

TEST_CASE("FewSound state roundtrip") {
  FewSoundConfig c;
  c.window = 512;
  c.embedding_dim = 8;
  c.stem_channels = 4;
  c.block_channels = {4, 8};
  c.kernel = 5;
  c.weight_encoder_hidden = 16;
  c.hyper_hidden = {12, 10};
  c.target = InrConfig::defaults_for(Arch::kan);
  c.target.layers = {4, 3};
  c.lr = 3e-4;
  c.seed = 9;
  auto s = FewSoundState::init(c);
  s.eta = oracle::random_vector(s.eta.size(), 1);
  const auto bytes = encode_state(s);
  CHECK(peek_kind(bytes) == FileKind::fewsound_state);
  auto back = decode_state(bytes);
  CHECK(back.config == s.config);
  CHECK(back.gamma == s.gamma);
  CHECK(back.delta == s.delta);
  CHECK(back.eta == s.eta);
  CHECK(back.theta == s.theta);
  CHECK(encode_state(back) == bytes);
  CHECK_THROWS_AS(decode_model(bytes), ParseError);
}

TEST_CASE("save and load through the filesystem") {
  const auto dir = oracle::temp_dir("model_io");
  auto m = InrModel::build(InrConfig::defaults_for(Arch::rff));
  save_model(dir / "m.ainr", m);
  CHECK(std::filesystem::file_size(dir / "m.ainr") == model_file_size(m.config()));
  CHECK(!std::filesystem::exists(dir / "m.ainr.tmp"));
  CHECK(load_model(dir / "m.ainr").flatten() == m.flatten());
  CHECK(load_model(dir / "m.ainr").rff_projection() == m.rff_projection());

  const auto bytes = read_file(dir / "m.ainr");
  write_file_atomic(dir / "cut.ainr", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_model(dir / "cut.ainr"), ParseError);
  CHECK_THROWS_AS(load_model(dir / "nope.ainr"), IoError);
}
