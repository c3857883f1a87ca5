#include "cranet/checkpoint.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cranet/errors.h"

namespace cranet {
namespace {

constexpr std::array<char, 4> kMagic = {'C', 'R', 'A', 'E'};

template <typename U>
void put_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw DataError("checkpoint truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

void put_array(std::ostream& out, std::span<const double> values) {
  for (double v : values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

void get_array(std::istream& in, std::span<double> values) {
  for (double& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
}

std::uint32_t mode_tag(ReflectionMode m) {
  switch (m) {
    case ReflectionMode::kTied: return 0;
    case ReflectionMode::kIndependent: return 1;
    case ReflectionMode::kImplicit: return 2;
    case ReflectionMode::kPlain: return 3;
  }
  return 0;
}

ReflectionMode mode_from_tag(std::uint32_t t) {
  switch (t) {
    case 0: return ReflectionMode::kTied;
    case 1: return ReflectionMode::kIndependent;
    case 2: return ReflectionMode::kImplicit;
    case 3: return ReflectionMode::kPlain;
    default: throw DataError("checkpoint has unknown mode tag " + std::to_string(t));
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const ModelParams& p = ckpt.params;
  p.validate();
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, mode_tag(p.mode));
  put_le<std::uint32_t>(out, ckpt.hyper.orientation == Orientation::kItem ? 0u : 1u);
  put_le<std::uint64_t>(out, p.input_dim());
  put_le<std::uint64_t>(out, ckpt.vector_count);
  put_le<std::uint64_t>(out, p.hidden_dim());
  for (const auto& t : p.tensors()) put_array(out, t);

  std::string block;
  for (const auto& [k, v] : to_key_values(ckpt.hyper)) block += k + "=" + v + "\n";
  put_le<std::uint64_t>(out, block.size());
  out.write(block.data(), static_cast<std::streamsize>(block.size()));
  if (!out) throw DataError("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("not a checkpoint (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ModelParams& p = ckpt.params;
  p.mode = mode_from_tag(get_le<std::uint32_t>(in));
  const auto orient = get_le<std::uint32_t>(in);
  if (orient > 1) throw DataError("checkpoint has unknown orientation tag");
  const auto n = static_cast<std::size_t>(get_le<std::uint64_t>(in));
  ckpt.vector_count = static_cast<std::size_t>(get_le<std::uint64_t>(in));
  const auto d = static_cast<std::size_t>(get_le<std::uint64_t>(in));
  p.V = DenseMatrix(d, n);
  p.W = DenseMatrix(n, d);
  if (p.mode == ReflectionMode::kImplicit) p.T = DenseMatrix(d, d);
  if (p.mode == ReflectionMode::kIndependent) p.U = DenseMatrix(n, d);
  p.c = DenseVector(d);
  p.b = DenseVector(n);
  for (auto t : p.tensors()) get_array(in, t);

  const auto len = get_le<std::uint64_t>(in);
  std::string block(len, '\0');
  in.read(block.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("checkpoint truncated in hyperparameter block");
  std::istringstream lines(block);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("bad hyperparameter line '" + line + "'");
    if (!set_hyper_param(ckpt.hyper, line.substr(0, eq), line.substr(eq + 1))) {
      throw DataError("unknown hyperparameter '" + line.substr(0, eq) + "' in checkpoint");
    }
  }
  ckpt.hyper.orientation = orient == 0 ? Orientation::kItem : Orientation::kUser;
  p.validate();
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace cranet
