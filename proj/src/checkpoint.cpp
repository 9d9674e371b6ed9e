#include "dfalab/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "dfalab/errors.hpp"

namespace dfalab {

namespace {

constexpr char kMagic[4] = {'D', 'F', 'L', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated checkpoint while reading " + what);
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_raw(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const std::string& what) {
  const auto len = read_raw<std::uint32_t>(in, what);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw IoError("truncated checkpoint while reading " + what);
  return s;
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, kVersion);
  const ModelConfig& c = model.config;
  for (const int field : {c.n_layer, c.d_model, c.n_head, c.d_ff, c.vocab_size, c.context}) {
    write_raw(out, static_cast<std::int32_t>(field));
  }
  write_raw(out, static_cast<std::uint8_t>(c.forward_activation));
  write_raw(out, static_cast<std::uint8_t>(c.backward_derivative));
  write_raw(out, static_cast<std::uint8_t>(c.residual_backward));

  std::uint32_t n_tensors = 0;
  model.params.for_each([&](const std::string&, const Matrix&) { ++n_tensors; });
  write_raw(out, n_tensors);
  model.params.for_each([&](const std::string& name, const Matrix& m) {
    write_string(out, name);
    write_raw(out, static_cast<std::uint64_t>(m.rows()));
    write_raw(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  });
  if (!out) throw IoError("write failure on '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError("'" + path + "' is not a model checkpoint (bad magic)");
  }
  const auto version = read_raw<std::uint32_t>(in, "version");
  if (version != kVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig c;
  c.n_layer = read_raw<std::int32_t>(in, "n_layer");
  c.d_model = read_raw<std::int32_t>(in, "d_model");
  c.n_head = read_raw<std::int32_t>(in, "n_head");
  c.d_ff = read_raw<std::int32_t>(in, "d_ff");
  c.vocab_size = read_raw<std::int32_t>(in, "vocab_size");
  c.context = read_raw<std::int32_t>(in, "context");
  c.forward_activation = static_cast<Activation>(read_raw<std::uint8_t>(in, "activation"));
  c.backward_derivative =
      static_cast<BackwardDerivative>(read_raw<std::uint8_t>(in, "derivative"));
  c.residual_backward =
      static_cast<ResidualBackward>(read_raw<std::uint8_t>(in, "residual mode"));
  c.validate();

  // Shape the parameter set from the config, then demand exact agreement
  // with the stored names/shapes so a corrupt file cannot half-load.
  Model model = init_model(c, RngState(0));
  const auto n_tensors = read_raw<std::uint32_t>(in, "tensor count");
  std::uint32_t expected = 0;
  model.params.for_each([&](const std::string&, const Matrix&) { ++expected; });
  if (n_tensors != expected) {
    throw ValidationError("checkpoint holds " + std::to_string(n_tensors) + " tensors, config implies " +
                          std::to_string(expected));
  }
  model.params.for_each([&](const std::string& name, Matrix& m) {
    const std::string stored = read_string(in, "tensor name");
    if (stored != name) {
      throw ValidationError("checkpoint tensor '" + stored + "' where '" + name +
                            "' was expected");
    }
    const auto rows = read_raw<std::uint64_t>(in, name + " rows");
    const auto cols = read_raw<std::uint64_t>(in, name + " cols");
    if (rows != static_cast<std::uint64_t>(m.rows()) ||
        cols != static_cast<std::uint64_t>(m.cols())) {
      throw ValidationError("checkpoint tensor '" + name + "' is " + std::to_string(rows) +
                            "x" + std::to_string(cols) + ", config implies " + shape_str(m));
    }
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw IoError("truncated checkpoint while reading tensor '" + name + "'");
  });
  return model;
}

}  // namespace dfalab
