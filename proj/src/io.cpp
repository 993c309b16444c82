#include "geoloc/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "geoloc/error.hpp"
#include "geoloc/geo_locator.hpp"

namespace geoloc {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return trim(hash == std::string::npos ? line : line.substr(0, hash));
}

[[noreturn]] void parse_error(const std::filesystem::path& path, int line, const std::string& what) {
  throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view token, const std::filesystem::path& path, int line) {
  double v = 0.0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  // from_chars rejects a leading '+'.
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    parse_error(path, line, "invalid number '" + std::string(token) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view token, const std::filesystem::path& path, int line) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    parse_error(path, line, "invalid integer '" + std::string(token) + "'");
  }
  return v;
}

std::vector<std::string> split_whitespace(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

std::string trajectory_line(double timestamp, const Pose& pose) {
  Eigen::Quaterniond q = pose.quaternion().normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d& p = pose.position();
  std::string line = format_double(timestamp);
  for (double v : {p.x(), p.y(), p.z(), q.x(), q.y(), q.z(), q.w()}) {
    line += ' ';
    line += format_double(v);
  }
  return line;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace

std::vector<Frame> load_trajectory(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<Frame> frames;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_comment(raw);
    if (line.empty()) continue;
    const auto tok = split_whitespace(line);
    if (tok.size() != 8) parse_error(path, line_no, "expected 8 fields, got " + std::to_string(tok.size()));
    std::array<double, 8> v{};
    for (std::size_t i = 0; i < 8; ++i) v[i] = parse_double(tok[i], path, line_no);
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    const double norm = q.norm();
    if (norm < 0.999 || norm > 1.001) {
      throw Error(ErrorCode::NonUnitQuaternion,
                  path.string() + ":" + std::to_string(line_no) + ": quaternion norm " +
                      format_double(norm));
    }
    Frame f;
    f.timestamp = v[0];
    f.label_pose = Pose(q.normalized(), Eigen::Vector3d(v[1], v[2], v[3]));
    frames.push_back(std::move(f));
  }
  std::stable_sort(frames.begin(), frames.end(),
                   [](const Frame& a, const Frame& b) { return *a.timestamp < *b.timestamp; });
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i].id = static_cast<FrameId>(i);
  return frames;
}

void save_trajectory(const std::filesystem::path& path, std::span<const Frame> frames) {
  std::string text;
  for (const Frame& f : frames) {
    if (!f.label_pose) continue;
    text += trajectory_line(f.timestamp.value_or(static_cast<double>(f.id)), *f.label_pose);
    text += '\n';
  }
  write_text(path, text);
}

std::vector<Observation> load_tracks(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<Observation> out;
  std::set<std::pair<FrameId, PointId>> seen;
  std::string raw;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (!header_seen) {
      std::string header = line;
      header.erase(std::remove(header.begin(), header.end(), ' '), header.end());
      // Tolerate a UTF-8 byte order mark.
      if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
      if (header != "frame_id,point_id,u,v") parse_error(path, line_no, "bad header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) fields.push_back(trim(field));
    if (fields.size() != 4) parse_error(path, line_no, "expected 4 fields");
    Observation obs;
    obs.frame_id = parse_int(fields[0], path, line_no);
    obs.point_id = parse_int(fields[1], path, line_no);
    obs.pixel = {parse_double(fields[2], path, line_no), parse_double(fields[3], path, line_no)};
    if (!seen.insert({obs.frame_id, obs.point_id}).second) {
      throw Error(ErrorCode::DuplicateObservation,
                  path.string() + ":" + std::to_string(line_no) + ": frame " +
                      std::to_string(obs.frame_id) + " point " + std::to_string(obs.point_id));
    }
    out.push_back(obs);
  }
  if (!header_seen) parse_error(path, line_no, "missing header");
  return out;
}

void save_tracks(const std::filesystem::path& path, std::span<const Observation> tracks) {
  std::string text = "frame_id,point_id,u,v\n";
  for (const Observation& o : tracks) {
    text += std::to_string(o.frame_id) + ',' + std::to_string(o.point_id) + ',' +
            format_double(o.pixel.x()) + ',' + format_double(o.pixel.y()) + '\n';
  }
  write_text(path, text);
}

Intrinsics load_intrinsics(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::map<std::string, double> kv;
  std::vector<double> plain;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_comment(raw);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon != std::string::npos) {
      kv[trim(line.substr(0, colon))] = parse_double(trim(line.substr(colon + 1)), path, line_no);
    } else {
      for (const auto& tok : split_whitespace(line)) plain.push_back(parse_double(tok, path, line_no));
    }
  }
  if (!kv.empty() && !plain.empty()) parse_error(path, line_no, "mixed key:value and plain values");
  if (kv.empty()) {
    if (plain.size() != 4) parse_error(path, line_no, "expected 4 values fx fy cx cy");
    return Intrinsics(plain[0], plain[1], plain[2], plain[3]);
  }
  for (const char* key : {"fx", "fy", "cx", "cy"}) {
    if (!kv.count(key)) parse_error(path, line_no, std::string("missing key ") + key);
  }
  Intrinsics k(kv["fx"], kv["fy"], kv["cx"], kv["cy"]);
  if (kv.count("width") || kv.count("height")) {
    if (!kv.count("width") || !kv.count("height")) parse_error(path, line_no, "width and height go together");
    k.set_image_size(static_cast<int>(kv["width"]), static_cast<int>(kv["height"]));
  }
  return k;
}

void save_intrinsics(const std::filesystem::path& path, const Intrinsics& k) {
  std::string text = "fx: " + format_double(k.fx()) + "\nfy: " + format_double(k.fy()) +
                     "\ncx: " + format_double(k.cx()) + "\ncy: " + format_double(k.cy()) + '\n';
  if (auto size = k.image_size()) {
    text += "width: " + std::to_string((*size)(0)) + "\nheight: " + std::to_string((*size)(1)) + '\n';
  }
  write_text(path, text);
}

namespace {

constexpr std::array<char, 4> kDescriptorMagic = {'G', 'L', 'D', 'C'};
constexpr std::uint32_t kDescriptorVersion = 1;

template <typename T>
void put_le(std::string& buf, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

std::vector<DescriptorRecord> load_descriptors(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kDescriptorMagic.data(), 4) != 0) {
    throw Error(ErrorCode::ParseError, path.string() + ": not a GLDC descriptor file");
  }
  const auto version = get_le<std::uint32_t>(data + 4);
  const auto count = get_le<std::uint32_t>(data + 8);
  const auto dim = get_le<std::uint32_t>(data + 12);
  if (version != kDescriptorVersion) {
    throw Error(ErrorCode::ParseError, path.string() + ": unsupported version " + std::to_string(version));
  }
  const std::size_t record = 8 + 4 * static_cast<std::size_t>(dim);
  if (bytes.size() != 16 + record * count) {
    throw Error(ErrorCode::ParseError, path.string() + ": size does not match header");
  }
  std::vector<DescriptorRecord> out(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const unsigned char* p = data + 16 + record * i;
    out[i].frame_id = static_cast<FrameId>(get_le<std::uint64_t>(p));
    out[i].values.resize(dim);
    for (std::uint32_t d = 0; d < dim; ++d) out[i].values[d] = get_le<float>(p + 8 + 4 * d);
  }
  return out;
}

void save_descriptors(const std::filesystem::path& path, std::span<const DescriptorRecord> records) {
  const std::uint32_t dim = records.empty() ? 0 : static_cast<std::uint32_t>(records.front().values.size());
  std::string buf(kDescriptorMagic.begin(), kDescriptorMagic.end());
  put_le(buf, kDescriptorVersion);
  put_le(buf, static_cast<std::uint32_t>(records.size()));
  put_le(buf, dim);
  for (const auto& r : records) {
    if (r.values.size() != dim) throw Error(ErrorCode::DimensionMismatch, "descriptor dimensions differ");
    put_le(buf, static_cast<std::uint64_t>(r.frame_id));
    for (float v : r.values) put_le(buf, v);
  }
  write_text(path, buf);
}

std::filesystem::path estimates_json_path(const std::filesystem::path& trajectory_path) {
  std::filesystem::path p = trajectory_path;
  p += ".cov.json";
  return p;
}

void save_estimates(const std::filesystem::path& path, std::span<const PoseEstimate> estimates) {
  std::string text;
  json doc;
  doc["estimates"] = json::array();
  for (const PoseEstimate& e : estimates) {
    text += trajectory_line(e.timestamp, e.pose);
    text += '\n';
    json cov = json::array();
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) cov.push_back(e.covariance(r, c));
    const IsometricSigmas sig = isometric_sigmas(e.covariance);
    doc["estimates"].push_back({{"frame_id", e.frame_id},
                                {"timestamp", e.timestamp},
                                {"source", to_string(e.source)},
                                {"covariance", std::move(cov)},
                                {"sigma_p", sig.position},
                                {"sigma_r", sig.rotation}});
  }
  write_text(path, text);
  write_text(estimates_json_path(path), doc.dump(2) + '\n');
}

std::vector<PoseEstimate> load_estimates(const std::filesystem::path& path) {
  const auto frames = load_trajectory(path);
  auto in = open_in(estimates_json_path(path));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, estimates_json_path(path).string() + ": " + e.what());
  }
  const auto& items = doc.at("estimates");
  if (items.size() != frames.size()) {
    throw Error(ErrorCode::ParseError, "trajectory and covariance file disagree on length");
  }
  // The trajectory loader sorts by timestamp; match JSON rows the same way.
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return items[a].at("timestamp").get<double>() < items[b].at("timestamp").get<double>();
  });
  std::vector<PoseEstimate> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& item = items[order[i]];
    PoseEstimate e;
    e.pose = *frames[i].label_pose;
    e.timestamp = *frames[i].timestamp;
    e.frame_id = item.at("frame_id").get<FrameId>();
    e.source = parse_source(item.at("source").get<std::string>());
    const auto& cov = item.at("covariance");
    if (cov.size() != 36) throw Error(ErrorCode::ParseError, "covariance must have 36 entries");
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) e.covariance(r, c) = cov[static_cast<std::size_t>(6 * r + c)].get<double>();
    out.push_back(e);
  }
  return out;
}

}  // namespace geoloc
