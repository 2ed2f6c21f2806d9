#include "gridres/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "gridres/error.hpp"
#include "gridres/feeder.hpp"
#include "gridres/kv_config.hpp"

namespace fs = std::filesystem;

namespace gridres {
namespace {

constexpr char kMagic[4] = {'G', 'R', 'P', 'W'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "parameter files assume little endian");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const fs::path& path) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw CheckpointError(fmt::format("{}: truncated parameter file", path.string()));
  }
  return v;
}

Tensor tensor_of(const Mlp& net) {
  Tensor t;
  for (int s : net.sizes()) t.dims.push_back(static_cast<std::uint32_t>(s));
  t.data = net.params();
  return t;
}

void restore(Mlp& net, const Tensor& t, const fs::path& path) {
  std::vector<std::uint32_t> want;
  for (int s : net.sizes()) want.push_back(static_cast<std::uint32_t>(s));
  if (t.dims != want || t.data.size() != net.num_params()) {
    throw CheckpointError(fmt::format("{}: network shape mismatch", path.string()));
  }
  net.params() = t.data;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_exact(v[i]);
  }
  return s;
}

const char* kFiles[4] = {"strategic_actor.bin", "strategic_critic.bin", "tactical_actor.bin",
                         "tactical_critic.bin"};

}  // namespace

void write_tensor(const fs::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError(fmt::format("{}: cannot open for writing", path.string()));
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put<std::uint32_t>(os, d);
  put<std::uint64_t>(os, t.data.size());
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  os.flush();
  if (!os) throw CheckpointError(fmt::format("{}: write failed", path.string()));
}

Tensor read_tensor(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError(fmt::format("{}: cannot open", path.string()));
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError(fmt::format("{}: bad magic", path.string()));
  }
  auto version = get<std::uint32_t>(is, path);
  if (version != kVersion) {
    throw CheckpointError(fmt::format("{}: unsupported version {}", path.string(), version));
  }
  Tensor t;
  auto ndims = get<std::uint32_t>(is, path);
  if (ndims > 64) throw CheckpointError(fmt::format("{}: implausible rank", path.string()));
  for (std::uint32_t i = 0; i < ndims; ++i) t.dims.push_back(get<std::uint32_t>(is, path));
  auto count = get<std::uint64_t>(is, path);
  if (count > (1ull << 32)) throw CheckpointError(fmt::format("{}: implausible size", path.string()));
  t.data.resize(count);
  if (!is.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(count * sizeof(double)))) {
    throw CheckpointError(fmt::format("{}: truncated parameter file", path.string()));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw CheckpointError(fmt::format("{}: trailing bytes", path.string()));
  }
  return t;
}

std::string meta_to_text(const CheckpointMeta& m) {
  std::string s;
  s += fmt::format("episode = {}\n", m.episode);
  s += fmt::format("average_reward = {}\n", format_exact(m.average_reward));
  s += fmt::format("best_average = {}\n", format_exact(m.best_average));
  s += fmt::format("reward_count = {}\n", m.reward_stats.count);
  s += fmt::format("reward_mean = {}\n", format_exact(m.reward_stats.mean));
  s += fmt::format("reward_m2 = {}\n", format_exact(m.reward_stats.m2));
  auto norms = [&](const char* name, const VectorRunningStats& v) {
    s += fmt::format("{}_count = {}\n", name, v.count);
    s += fmt::format("{}_mean = {}\n", name, join(v.mean));
    s += fmt::format("{}_m2 = {}\n", name, join(v.m2));
  };
  norms("strategic_norm", m.strategic_norms);
  norms("tactical_norm", m.tactical_norms);
  return s;
}

CheckpointMeta meta_from_text(std::string_view text) {
  auto kv = KeyValueConfig::parse(text);
  CheckpointMeta m;
  m.episode = kv.get_int("episode");
  m.average_reward = kv.get_double("average_reward");
  m.best_average = kv.get_double("best_average");
  m.reward_stats.count = static_cast<std::int64_t>(kv.get_double("reward_count"));
  m.reward_stats.mean = kv.get_double("reward_mean");
  m.reward_stats.m2 = kv.get_double("reward_m2");
  auto norms = [&](const std::string& name, VectorRunningStats& v) {
    v.count = static_cast<std::int64_t>(kv.get_double(name + "_count"));
    v.mean = kv.get_doubles(name + "_mean");
    v.m2 = kv.get_doubles(name + "_m2");
    if (v.mean.size() != v.m2.size()) throw DataError(name + " statistics width mismatch");
  };
  norms("strategic_norm", m.strategic_norms);
  norms("tactical_norm", m.tactical_norms);
  kv.require_all_used();
  return m;
}

void save_checkpoint(const fs::path& dir, const Agent& strategic, const Agent& tactical,
                     const CheckpointMeta& meta, const SaveOptions& opts) {
  fs::path tmp = dir;
  tmp += ".tmp";
  fs::path old = dir;
  old += ".old";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  if (!fs::create_directories(tmp, ec) && ec) {
    throw CheckpointError(fmt::format("{}: {}", tmp.string(), ec.message()));
  }
  auto notify = [&](const fs::path& p) {
    if (opts.on_file_written) opts.on_file_written(p);
  };
  const Mlp* nets[4] = {&strategic.actor, &strategic.critic, &tactical.actor, &tactical.critic};
  for (int i = 0; i < 4; ++i) {
    write_tensor(tmp / kFiles[i], tensor_of(*nets[i]));
    notify(tmp / kFiles[i]);
  }
  {
    std::ofstream os(tmp / "meta.txt", std::ios::trunc);
    os << meta_to_text(meta);
    os.flush();
    if (!os) throw CheckpointError(fmt::format("{}: write failed", (tmp / "meta.txt").string()));
  }
  notify(tmp / "meta.txt");

  fs::remove_all(old, ec);
  if (fs::exists(dir)) {
    fs::rename(dir, old);
    notify(old);
  }
  fs::rename(tmp, dir);
  fs::remove_all(old, ec);
}

LoadResult load_checkpoint(const fs::path& dir, Agent& strategic, Agent& tactical) {
  LoadResult r;
  if (!fs::is_directory(dir)) {
    r.error = fmt::format("{}: no such checkpoint", dir.string());
    return r;
  }
  Agent s = strategic, t = tactical;
  try {
    Mlp* nets[4] = {&s.actor, &s.critic, &t.actor, &t.critic};
    for (int i = 0; i < 4; ++i) restore(*nets[i], read_tensor(dir / kFiles[i]), dir / kFiles[i]);
    if (fs::exists(dir / "meta.txt")) {
      auto meta = meta_from_text(read_text_file(dir / "meta.txt"));
      if (meta.strategic_norms.dim() != s.input_dim() || meta.tactical_norms.dim() != t.input_dim()) {
        throw CheckpointError("normalization statistics width mismatch");
      }
      s.obs_stats = meta.strategic_norms;
      t.obs_stats = meta.tactical_norms;
      r.meta = std::move(meta);
    }
  } catch (const std::exception& e) {
    r.error = e.what();
    r.meta.reset();
    return r;
  }
  strategic = std::move(s);
  tactical = std::move(t);
  r.ok = true;
  return r;
}

std::string checkpoint_name(int episode) { return fmt::format("ckpt_{}", episode); }

std::vector<fs::path> list_checkpoints(const fs::path& root) {
  std::vector<std::pair<long, fs::path>> found;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) return {};
  for (const auto& e : fs::directory_iterator(root)) {
    if (!e.is_directory()) continue;
    auto name = e.path().filename().string();
    if (name.rfind("ckpt_", 0) != 0) continue;
    auto num = name.substr(5);
    if (num.empty() || !std::all_of(num.begin(), num.end(), ::isdigit)) continue;
    found.emplace_back(std::stol(num), e.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& f : found) out.push_back(f.second);
  return out;
}

void cleanup_checkpoints(const fs::path& root, int keep) {
  auto all = list_checkpoints(root);
  const int excess = static_cast<int>(all.size()) - std::max(keep, 0);
  for (int i = 0; i < excess; ++i) fs::remove_all(all[i]);
}

}  // namespace gridres
