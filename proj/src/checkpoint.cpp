#include "fedprov/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace fedprov {

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'E', 'D', 'P', 'R', 'O', 'V', '\0'};

void put_u64(std::ostream& out, std::uint64_t v, int bytes = 8) {
  for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in, int bytes = 8) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw ValidationError("checkpoint is truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

const Standardizer* Checkpoint::standardizer_for(Province p) const {
  const Standardizer* fallback = nullptr;
  for (const auto& [key, s] : standardizers) {
    if (key == to_string(p)) return &s;
    if (key == "*") fallback = &s;
  }
  return fallback;
}

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  check_consistent(ckpt.params);
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, kCheckpointVersion, 4);
  put_u64(out, ckpt.params.layout.family == ModelFamily::kLogistic ? 0 : 1, 1);
  put_u64(out, ckpt.params.layout.tensors.size(), 4);
  for (const auto& t : ckpt.params.layout.tensors) {
    put_u64(out, t.rows);
    put_u64(out, t.cols);
  }
  put_u64(out, ckpt.standardizers.size(), 4);
  for (const auto& [key, s] : ckpt.standardizers) {
    if (key.empty() || key.size() > 4) throw ValidationError("standardizer key must be 1-4 chars");
    std::array<char, 4> k{};
    std::memcpy(k.data(), key.data(), key.size());
    out.write(k.data(), k.size());
    for (double v : s.mean) put_f64(out, v);
    for (double v : s.std) put_f64(out, v);
  }
  put_u64(out, static_cast<std::uint64_t>(ckpt.params.values.size()));
  for (Eigen::Index i = 0; i < ckpt.params.values.size(); ++i) put_f64(out, ckpt.params.values(i));
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_checkpoint(ckpt, out);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ValidationError("not a fedprov checkpoint");
  const auto version = get_u64(in, 4);
  if (version != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto family = get_u64(in, 1);
  if (family > 1) throw ValidationError("unknown model family tag in checkpoint");
  ckpt.params.layout.family = family == 0 ? ModelFamily::kLogistic : ModelFamily::kMlp;
  const auto n_tensors = get_u64(in, 4);
  if (n_tensors > 64) throw ValidationError("implausible tensor count in checkpoint");
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    const auto rows = get_u64(in);
    const auto cols = get_u64(in);
    ckpt.params.layout.tensors.push_back({rows, cols});
  }
  const auto n_std = get_u64(in, 4);
  if (n_std > 64) throw ValidationError("implausible standardizer count in checkpoint");
  for (std::uint64_t i = 0; i < n_std; ++i) {
    std::array<char, 4> k{};
    in.read(k.data(), k.size());
    if (!in) throw ValidationError("checkpoint is truncated");
    Standardizer s;
    for (double& v : s.mean) v = get_f64(in);
    for (double& v : s.std) v = get_f64(in);
    ckpt.standardizers.emplace_back(std::string(k.data(), strnlen(k.data(), k.size())), s);
  }
  const auto n_values = get_u64(in);
  if (n_values != ckpt.params.layout.size()) {
    throw ValidationError("checkpoint value count does not match its layout");
  }
  ckpt.params.values.resize(static_cast<Eigen::Index>(n_values));
  for (std::uint64_t i = 0; i < n_values; ++i) {
    ckpt.params.values(static_cast<Eigen::Index>(i)) = get_f64(in);
  }
  // Rejects layouts that do not belong to the family.
  if (ckpt.params.layout.family == ModelFamily::kLogistic) {
    (void)unflatten_logistic(ckpt.params);
  } else {
    (void)unflatten_mlp(ckpt.params);
  }
  return ckpt;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace fedprov
