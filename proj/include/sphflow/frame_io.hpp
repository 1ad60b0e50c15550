#pragma once

// Frame files and the run-directory manifest.
//
// CSV columns: id,kind,group,x,y,z,vx,vy,vz,rho,p,mass (shortest round-trip
// decimals, so import reproduces the frame exactly). VTK: legacy ASCII
// POLYDATA with one vertex per particle.

#include "sphflow/case_xml.hpp"
#include "sphflow/particle_frame.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sphflow {

class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

enum class FrameFormat { csv, vtk_legacy_ascii };

inline constexpr std::string_view kCsvHeader = "id,kind,group,x,y,z,vx,vy,vz,rho,p,mass";
inline constexpr std::string_view kVtkMagic = "# vtk DataFile Version 3.0";

inline std::string frame_to_csv(const ParticleFrame& f) {
  const auto d = format_double;
  std::string out(kCsvHeader);
  out += '\n';
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& x = f.position[i];
    const auto& v = f.velocity[i];
    out += std::to_string(f.id[i]) + ',' + std::string(to_string(f.kind[i])) + ',' + std::to_string(f.group[i]) + ',' +
           d(x.x()) + ',' + d(x.y()) + ',' + d(x.z()) + ',' + d(v.x()) + ',' + d(v.y()) + ',' + d(v.z()) + ',' +
           d(f.density[i]) + ',' + d(f.pressure[i]) + ',' + d(f.mass[i]) + '\n';
  }
  return out;
}

inline std::string frame_to_vtk(const ParticleFrame& f, std::string_view title = "sphflow particles") {
  const auto d = format_double;
  const std::size_t n = f.size();
  std::string out(kVtkMagic);
  out += "\n" + std::string(title) + " t=" + d(f.time) + "\nASCII\nDATASET POLYDATA\n";
  out += "POINTS " + std::to_string(n) + " double\n";
  for (const auto& x : f.position) out += d(x.x()) + ' ' + d(x.y()) + ' ' + d(x.z()) + '\n';
  out += "VERTICES " + std::to_string(n) + ' ' + std::to_string(2 * n) + '\n';
  for (std::size_t i = 0; i < n; ++i) out += "1 " + std::to_string(i) + '\n';
  out += "POINT_DATA " + std::to_string(n) + '\n';
  auto scalars = [&](std::string_view name, std::string_view type, auto&& value) {
    out += "SCALARS " + std::string(name) + ' ' + std::string(type) + " 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < n; ++i) out += value(i) + '\n';
  };
  scalars("id", "long", [&](std::size_t i) { return std::to_string(f.id[i]); });
  scalars("kind", "int", [&](std::size_t i) { return std::to_string(static_cast<int>(f.kind[i])); });
  scalars("group", "int", [&](std::size_t i) { return std::to_string(f.group[i]); });
  scalars("rho", "double", [&](std::size_t i) { return d(f.density[i]); });
  scalars("p", "double", [&](std::size_t i) { return d(f.pressure[i]); });
  scalars("mass", "double", [&](std::size_t i) { return d(f.mass[i]); });
  out += "VECTORS velocity double\n";
  for (const auto& v : f.velocity) out += d(v.x()) + ' ' + d(v.y()) + ' ' + d(v.z()) + '\n';
  return out;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path, "cannot open for writing");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw IoError(path, "write failed");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void export_frame(const ParticleFrame& f, FrameFormat format, const std::filesystem::path& path) {
  write_text_file(path, format == FrameFormat::csv ? frame_to_csv(f) : frame_to_vtk(f));
}

namespace io_detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, const std::filesystem::path& path, std::size_t line) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError(path, "line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace io_detail

/// Parses CSV produced by frame_to_csv. `time` is not stored in the file.
inline ParticleFrame frame_from_csv(std::string_view text, double time = 0.0,
                                    const std::filesystem::path& origin = "<memory>") {
  using io_detail::parse_number;
  ParticleFrame f;
  f.time = time;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kCsvHeader) throw IoError(origin, "unexpected CSV header '" + std::string(line) + "'");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto cols = io_detail::split(line, ',');
    if (cols.size() != 12) throw IoError(origin, "line " + std::to_string(line_no) + ": expected 12 columns");
    const auto kind = parse_particle_kind(cols[1]);
    if (!kind) throw IoError(origin, "line " + std::to_string(line_no) + ": bad kind '" + std::string(cols[1]) + "'");
    auto num = [&](int c) { return parse_number<double>(cols[static_cast<std::size_t>(c)], origin, line_no); };
    f.push_back(parse_number<std::int64_t>(cols[0], origin, line_no), *kind, parse_number<int>(cols[2], origin, line_no),
                Vec3(num(3), num(4), num(5)), Vec3(num(6), num(7), num(8)), num(9), num(10), num(11));
  }
  if (header) throw IoError(origin, "empty CSV");
  return f;
}

inline ParticleFrame import_frame_csv(const std::filesystem::path& path, double time = 0.0) {
  return frame_from_csv(read_text_file(path), time, path);
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  int index = 0;
  double time = 0.0;
  std::string stem;  // file name without extension
  bool operator==(const ManifestEntry&) const = default;
};

inline std::string frame_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d", index);
  return buf;
}

inline std::string manifest_to_text(const std::vector<ManifestEntry>& entries) {
  std::string out = "# index time_s stem\n";
  for (const auto& e : entries) out += std::to_string(e.index) + ' ' + format_double(e.time) + ' ' + e.stem + '\n';
  return out;
}

inline std::vector<ManifestEntry> manifest_from_text(std::string_view text,
                                                     const std::filesystem::path& origin = "<memory>") {
  std::vector<ManifestEntry> out;
  std::size_t line_no = 0;
  for (auto line : io_detail::split(text, '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto cols = io_detail::split(line, ' ');
    if (cols.size() != 3) throw IoError(origin, "line " + std::to_string(line_no) + ": expected 'index time stem'");
    out.push_back({io_detail::parse_number<int>(cols[0], origin, line_no),
                   io_detail::parse_number<double>(cols[1], origin, line_no), std::string(cols[2])});
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i].time > out[i - 1].time)) throw IoError(origin, "manifest times must be strictly increasing");
  return out;
}

/// Frames of a finished run, in manifest order.
struct RunData {
  std::filesystem::path dir;
  std::vector<ManifestEntry> manifest;
  std::vector<ParticleFrame> frames;
};

inline RunData load_run(const std::filesystem::path& dir) {
  RunData run;
  run.dir = dir;
  const auto manifest_path = dir / "manifest.txt";
  run.manifest = manifest_from_text(read_text_file(manifest_path), manifest_path);
  for (const auto& e : run.manifest) run.frames.push_back(import_frame_csv(dir / (e.stem + ".csv"), e.time));
  return run;
}

}  // namespace sphflow
