// SPDX-License-Identifier: Apache-2.0

#include "hicsim/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <type_traits>
#include <vector>

#include "hicsim/metrics.hpp"

namespace hicsim {
namespace {

constexpr char kMagic[8] = {'H', 'I', 'C', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

// Node payload tags.
enum : std::uint8_t {
  kTagStateless = 0,
  kTagHybrid = 1,
  kTagFixedPoint = 2,
  kTagFp32 = 3,
  kTagBatchNorm = 4,
};

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path) {
    fp_ = std::fopen(path.c_str(), "wb");
    if (!fp_) throw IoError("cannot open checkpoint for writing: " + path);
  }
  ~Writer() {
    if (fp_) std::fclose(fp_);
  }
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  template <class T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    raw(&v, sizeof(T));
  }

  void raw(const void* p, std::size_t n) {
    if (std::fwrite(p, 1, n, fp_) != n)
      throw IoError("write failure on checkpoint: " + path_);
  }

  void f64(double v) { pod(v); }
  void u8(std::uint8_t v) { pod(v); }
  void u32(std::uint32_t v) { pod(v); }
  void u64(std::uint64_t v) { pod(v); }
  void i32(std::int32_t v) { pod(v); }
  void i64(std::int64_t v) { pod(v); }

  void f64_vec(const std::vector<double>& v) {
    u64(v.size());
    if (!v.empty()) raw(v.data(), v.size() * sizeof(double));
  }

  void close() {
    if (std::fclose(fp_) != 0) {
      fp_ = nullptr;
      throw IoError("write failure on checkpoint: " + path_);
    }
    fp_ = nullptr;
  }

 private:
  std::string path_;
  std::FILE* fp_ = nullptr;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path) {
    fp_ = std::fopen(path.c_str(), "rb");
    if (!fp_) throw IoError("cannot open checkpoint: " + path);
  }
  ~Reader() {
    if (fp_) std::fclose(fp_);
  }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  template <class T>
  T pod() {
    static_assert(std::is_trivially_copyable_v<T>);
    T v;
    raw(&v, sizeof(T));
    return v;
  }

  void raw(void* p, std::size_t n) {
    if (std::fread(p, 1, n, fp_) != n)
      throw CheckpointError("truncated checkpoint: " + path_);
  }

  double f64() { return pod<double>(); }
  std::uint8_t u8() { return pod<std::uint8_t>(); }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::int32_t i32() { return pod<std::int32_t>(); }
  std::int64_t i64() { return pod<std::int64_t>(); }

  std::vector<double> f64_vec() {
    const std::uint64_t n = u64();
    if (n > (1ull << 32)) throw CheckpointError("implausible array size in " + path_);
    std::vector<double> v(static_cast<std::size_t>(n));
    if (n) raw(v.data(), v.size() * sizeof(double));
    return v;
  }

  bool at_eof() {
    const int c = std::fgetc(fp_);
    if (c == EOF) return true;
    std::ungetc(c, fp_);
    return false;
  }

 private:
  std::string path_;
  std::FILE* fp_ = nullptr;
};

void write_ml_device(Writer& w, const MultiLevelDevice& d) {
  w.f64(d.g_prog);
  w.f64(d.t_prog);
  w.f64(d.nu);
  w.i32(d.n_set);
  w.i32(d.set_in_cycle);
  w.i64(d.cycles);
  w.i64(d.events);
}

void read_ml_device(Reader& r, MultiLevelDevice& d) {
  d.g_prog = r.f64();
  d.t_prog = r.f64();
  d.nu = r.f64();
  d.n_set = r.i32();
  d.set_in_cycle = r.i32();
  d.cycles = r.i64();
  d.events = r.i64();
}

void write_bin_device(Writer& w, const BinaryDevice& d) {
  w.u8(d.state);
  w.f64(d.g_prog);
  w.f64(d.t_prog);
  w.f64(d.nu);
  w.i64(d.flips);
  w.i64(d.cycles);
  w.i32(d.set_in_cycle);
  w.i64(d.events);
}

void read_bin_device(Reader& r, BinaryDevice& d) {
  d.state = r.u8();
  d.g_prog = r.f64();
  d.t_prog = r.f64();
  d.nu = r.f64();
  d.flips = r.i64();
  d.cycles = r.i64();
  d.set_in_cycle = r.i32();
  d.events = r.i64();
}

void write_counters(Writer& w, const UpdateCounters& c) {
  w.u64(c.accumulates);
  w.u64(c.lsb_flips);
  w.u64(c.carries);
  w.u64(c.clamps);
  w.u64(c.msb_programs);
  w.u64(c.msb_pulses);
  w.u64(c.refreshes);
  w.u64(c.verify_failures);
}

void read_counters(Reader& r, UpdateCounters& c) {
  c.accumulates = r.u64();
  c.lsb_flips = r.u64();
  c.carries = r.u64();
  c.clamps = r.u64();
  c.msb_programs = r.u64();
  c.msb_pulses = r.u64();
  c.refreshes = r.u64();
  c.verify_failures = r.u64();
}

void write_hybrid(Writer& w, const HybridBackend& b) {
  const HybridWeightMatrix& m = b.matrix();
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  w.u32(static_cast<std::uint32_t>(m.scheme().lsb_bits));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      write_ml_device(w, m.plus(i, j));
      write_ml_device(w, m.minus(i, j));
    }
  for (int p = 0; p < m.scheme().lsb_bits; ++p)
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) write_bin_device(w, m.plane(p, i, j));
  w.u64(m.read_seq());
  write_counters(w, m.counters());
  const TiledCrossbar& xb = b.crossbar();
  const ClipSet& clips = xb.clips();
  w.f64(clips.fwd_in);
  w.f64(clips.fwd_out);
  w.f64(clips.bwd_in);
  w.f64(clips.bwd_out);
  w.u8(xb.frozen() ? 1 : 0);
  w.u64(xb.op_seq());
  w.u64(b.update_seq());
}

void read_hybrid(Reader& r, HybridBackend& b, int node) {
  HybridWeightMatrix& m = b.matrix();
  const auto rows = r.u32();
  const auto cols = r.u32();
  const auto bits = r.u32();
  if (static_cast<int>(rows) != m.rows() || static_cast<int>(cols) != m.cols() ||
      static_cast<int>(bits) != m.scheme().lsb_bits)
    throw CheckpointError("node " + std::to_string(node) +
                          ": hybrid array shape mismatch");
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      read_ml_device(r, m.plus(i, j));
      read_ml_device(r, m.minus(i, j));
    }
  for (int p = 0; p < m.scheme().lsb_bits; ++p)
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) read_bin_device(r, m.plane(p, i, j));
  m.set_read_seq(r.u64());
  read_counters(r, m.counters());
  TiledCrossbar& xb = b.crossbar();
  ClipSet clips;
  clips.fwd_in = r.f64();
  clips.fwd_out = r.f64();
  clips.bwd_in = r.f64();
  clips.bwd_out = r.f64();
  const bool frozen = r.u8() != 0;
  xb.restore_clips(clips, frozen);
  xb.set_op_seq(r.u64());
  b.set_update_seq(r.u64());
  xb.invalidate_snapshot();
}

void write_fixed(Writer& w, const FixedPointBackend& b) {
  w.u32(static_cast<std::uint32_t>(b.rows()));
  w.u32(static_cast<std::uint32_t>(b.cols()));
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      w.i32(b.level(i, j));
      w.i32(b.acc(i, j));
    }
  w.u64(b.op_seq());
  w.u64(b.update_seq());
}

void read_fixed(Reader& r, FixedPointBackend& b, int node) {
  const auto rows = r.u32();
  const auto cols = r.u32();
  if (static_cast<int>(rows) != b.rows() || static_cast<int>(cols) != b.cols())
    throw CheckpointError("node " + std::to_string(node) +
                          ": fixed-point array shape mismatch");
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      const int level = r.i32();
      const int acc = r.i32();
      b.set_state(i, j, level, acc);
    }
  b.set_op_seq(r.u64());
  b.set_update_seq(r.u64());
}

void write_fp32(Writer& w, const Fp32Backend& b) {
  w.u32(static_cast<std::uint32_t>(b.rows()));
  w.u32(static_cast<std::uint32_t>(b.cols()));
  w.raw(b.data(), static_cast<std::size_t>(b.rows()) * b.cols() * sizeof(double));
  w.u64(b.op_seq());
}

void read_fp32(Reader& r, Fp32Backend& b, int node) {
  const auto rows = r.u32();
  const auto cols = r.u32();
  if (static_cast<int>(rows) != b.rows() || static_cast<int>(cols) != b.cols())
    throw CheckpointError("node " + std::to_string(node) +
                          ": fp32 array shape mismatch");
  r.raw(b.data(), static_cast<std::size_t>(b.rows()) * b.cols() * sizeof(double));
  b.set_op_seq(r.u64());
}

void write_bn(Writer& w, const BatchNormState& bn) {
  w.f64_vec(bn.gamma);
  w.f64_vec(bn.beta);
  w.f64_vec(bn.running_mean);
  w.f64_vec(bn.running_var);
}

void read_bn(Reader& r, BatchNormState& bn, int node) {
  std::vector<double> g = r.f64_vec();
  std::vector<double> b = r.f64_vec();
  std::vector<double> m = r.f64_vec();
  std::vector<double> v = r.f64_vec();
  const std::size_t c = static_cast<std::size_t>(bn.channels());
  if (g.size() != c || b.size() != c || m.size() != c || v.size() != c)
    throw CheckpointError("node " + std::to_string(node) +
                          ": batchnorm channel count mismatch");
  bn.gamma = std::move(g);
  bn.beta = std::move(b);
  bn.running_mean = std::move(m);
  bn.running_var = std::move(v);
}

std::uint8_t node_tag(const NetNode& n) {
  if (n.spec.kind == LayerKind::kBatchNorm) return kTagBatchNorm;
  if (!n.backend) return kTagStateless;
  const WeightBackend* b = n.backend.get();
  if (dynamic_cast<const HybridBackend*>(b)) return kTagHybrid;
  if (dynamic_cast<const FixedPointBackend*>(b)) return kTagFixedPoint;
  if (dynamic_cast<const Fp32Backend*>(b)) return kTagFp32;
  throw CheckpointError("unknown backend type");
}

}  // namespace

void save_checkpoint(const std::string& path, const Network& net,
                     const SimClock& clock) {
  if (!net.built()) throw CheckpointError("cannot checkpoint an unbuilt network");
  Writer w(path);
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  w.f64(clock.now);
  w.u32(static_cast<std::uint32_t>(net.size()));
  for (int k = 0; k < net.size(); ++k) {
    const NetNode& n = net.node(k);
    const std::uint8_t tag = node_tag(n);
    w.u8(tag);
    switch (tag) {
      case kTagHybrid:
        write_hybrid(w, *dynamic_cast<const HybridBackend*>(n.backend.get()));
        break;
      case kTagFixedPoint:
        write_fixed(w, *dynamic_cast<const FixedPointBackend*>(n.backend.get()));
        break;
      case kTagFp32:
        write_fp32(w, *dynamic_cast<const Fp32Backend*>(n.backend.get()));
        break;
      case kTagBatchNorm:
        write_bn(w, n.bn);
        break;
      default:
        break;
    }
  }
  w.close();
}

double load_checkpoint(const std::string& path, Network& net) {
  if (!net.built()) throw CheckpointError("cannot restore into an unbuilt network");
  Reader r(path);
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("bad checkpoint magic in " + path);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " in " + path);
  const double t = r.f64();
  const std::uint32_t n_nodes = r.u32();
  if (static_cast<int>(n_nodes) != net.size())
    throw CheckpointError("node count mismatch: checkpoint has " +
                          std::to_string(n_nodes) + ", network has " +
                          std::to_string(net.size()));
  for (int k = 0; k < net.size(); ++k) {
    NetNode& n = net.node(k);
    const std::uint8_t want = node_tag(n);
    const std::uint8_t got = r.u8();
    if (got != want)
      throw CheckpointError("node " + std::to_string(k) + ": layer type mismatch");
    switch (got) {
      case kTagHybrid:
        read_hybrid(r, *dynamic_cast<HybridBackend*>(n.backend.get()), k);
        break;
      case kTagFixedPoint:
        read_fixed(r, *dynamic_cast<FixedPointBackend*>(n.backend.get()), k);
        break;
      case kTagFp32:
        read_fp32(r, *dynamic_cast<Fp32Backend*>(n.backend.get()), k);
        break;
      case kTagBatchNorm:
        read_bn(r, n.bn, k);
        break;
      default:
        break;
    }
  }
  if (!r.at_eof()) throw CheckpointError("trailing bytes in checkpoint: " + path);
  return t;
}

}  // namespace hicsim
