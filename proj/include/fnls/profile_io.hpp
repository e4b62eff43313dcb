#pragma once

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "fnls/errors.hpp"
#include "fnls/solvers.hpp"
#include "fnls/spectral.hpp"

#ifndef FNLS_VERSION
#define FNLS_VERSION "1.0.0"
#endif

namespace fnls {

static_assert(std::endian::native == std::endian::little, "profile files are written in native little-endian order");

inline constexpr char kProfileMagic[8] = {'F', 'N', 'L', 'S', 'P', 'R', 'O', 'F'};
inline constexpr std::uint32_t kProfileFormat = 1;

/// Header fields stored next to the samples.
struct ProfileMeta {
  double s = std::numeric_limits<double>::quiet_NaN();
  double N = std::numeric_limits<double>::quiet_NaN();
  double beta = 0.0;
  double multiplier = std::numeric_limits<double>::quiet_NaN();  ///< NaN when absent
};

struct StoredProfile {
  Profile profile;
  ProfileMeta meta;
};

namespace detail {

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DomainError("truncated profile file");
  return v;
}

}  // namespace detail

/// Layout: magic[8], u32 format, u32 gauge, u64 M, f64 L, s, N, beta, multiplier,
/// then M (re, im) f64 pairs. All little-endian.
inline void write_profile(const std::string& path, const Profile& u, const ProfileMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write " + path);
  out.write(kProfileMagic, 8);
  detail::put<std::uint32_t>(out, kProfileFormat);
  detail::put<std::uint32_t>(out, u.gauge() == Gauge::fixed ? 1u : 0u);
  detail::put<std::uint64_t>(out, u.size());
  detail::put<double>(out, u.grid().length());
  detail::put<double>(out, meta.s);
  detail::put<double>(out, meta.N);
  detail::put<double>(out, meta.beta);
  detail::put<double>(out, meta.multiplier);
  for (const auto& z : u.values()) {
    detail::put<double>(out, z.real());
    detail::put<double>(out, z.imag());
  }
  if (!out) throw DomainError("failed while writing " + path);
}

inline StoredProfile read_profile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kProfileMagic, 8) != 0) throw DomainError(path + " is not a profile file");
  const auto format = detail::get<std::uint32_t>(in);
  if (format != kProfileFormat) throw DomainError("unsupported profile format " + std::to_string(format));
  const auto gauge = detail::get<std::uint32_t>(in);
  const auto m = detail::get<std::uint64_t>(in);
  const double length = detail::get<double>(in);
  StoredProfile sp;
  sp.meta.s = detail::get<double>(in);
  sp.meta.N = detail::get<double>(in);
  sp.meta.beta = detail::get<double>(in);
  sp.meta.multiplier = detail::get<double>(in);
  CVec v(m);
  for (auto& z : v) {
    const double re = detail::get<double>(in);
    const double im = detail::get<double>(in);
    z = cplx(re, im);
  }
  sp.profile = Profile(make_grid(length, m), std::move(v), gauge == 1u ? Gauge::fixed : Gauge::raw);
  return sp;
}

/// Plot data with columns x, re, im, abs; one row per grid node.
inline void write_profile_csv(const std::string& path, const Profile& u) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  out << "x,re,im,abs\n";
  char buf[128];
  for (std::size_t j = 0; j < u.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", u.grid().nodes()[j], u[j].real(), u[j].imag(),
                  std::abs(u[j]));
    out << buf;
  }
}

// ---- solve cache ----------------------------------------------------------------------

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CacheKey {
  double s = 1.5;
  double N = 0.1;
  double L = 0.0;
  std::size_t M = 0;
  std::string method;
  double tol = 0.0;
  std::string variant;  ///< anything else that changes the result (seed kind, init seed)

  std::string canonical() const {
    return "s=" + exact(s) + ";N=" + exact(N) + ";L=" + exact(L) + ";M=" + std::to_string(M) + ";method=" + method +
           ";tol=" + exact(tol) + ";variant=" + variant + ";version=" + FNLS_VERSION;
  }
  std::string hash() const { return hex64(fnv1a(canonical())); }
};

/// Directory of solved profiles: <hash>.prof holds the samples, <hash>.json the key and the
/// scalar diagnostics.
class ProfileCache {
 public:
  explicit ProfileCache(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }

  bool enabled() const { return !dir_.empty(); }
  const std::string& dir() const { return dir_; }

  std::optional<SolveResult> load(const CacheKey& key) const {
    if (!enabled()) return std::nullopt;
    const auto base = std::filesystem::path(dir_) / key.hash();
    std::ifstream side(base.string() + ".json");
    if (!side) return std::nullopt;
    nlohmann::json j;
    try {
      side >> j;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
    if (j.value("key", std::string()) != key.canonical()) return std::nullopt;
    StoredProfile sp = read_profile(base.string() + ".prof");
    SolveResult r;
    r.profile = sp.profile;
    r.multiplier = j.at("multiplier").get<double>();
    r.residual = j.at("residual").get<double>();
    r.energy = j.at("energy").get<double>();
    r.mass = j.at("mass").get<double>();
    r.iterations = j.at("iterations").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.stabilizer = j.at("stabilizer").get<double>();
    const std::string m = j.at("method").get<std::string>();
    r.method = m == method_name(Method::gradient_flow) ? Method::gradient_flow
               : m == method_name(Method::closed_form) ? Method::closed_form
                                                       : Method::petviashvili;
    return r;
  }

  /// Stores converged results only.
  void store(const CacheKey& key, const SolveResult& r, const ProfileMeta& meta) const {
    if (!enabled() || !r.converged) return;
    const auto base = std::filesystem::path(dir_) / key.hash();
    // write to temporaries and rename so that concurrent readers never see partial files
    const std::string tag = ".tmp" + hex64(fnv1a(key.canonical() + std::to_string(reinterpret_cast<std::uintptr_t>(&r))));
    write_profile(base.string() + ".prof" + tag, r.profile, meta);
    nlohmann::json j = {{"key", key.canonical()},       {"multiplier", r.multiplier}, {"residual", r.residual},
                        {"energy", r.energy},           {"mass", r.mass},             {"iterations", r.iterations},
                        {"converged", r.converged},     {"stabilizer", r.stabilizer},
                        {"method", method_name(r.method)}};
    {
      std::ofstream side(base.string() + ".json" + tag);
      side << j.dump(2) << '\n';
    }
    std::filesystem::rename(base.string() + ".prof" + tag, base.string() + ".prof");
    std::filesystem::rename(base.string() + ".json" + tag, base.string() + ".json");
  }

 private:
  std::string dir_;
};

}  // namespace fnls
