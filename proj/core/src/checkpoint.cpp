#include "sspfield/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "sspfield/errors.hpp"

namespace sspfield {
namespace {

// Serialization is explicitly little-endian regardless of host order.
void put_f32_le(std::string& out, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  out.push_back(static_cast<char>(u & 0xff));
  out.push_back(static_cast<char>((u >> 8) & 0xff));
  out.push_back(static_cast<char>((u >> 16) & 0xff));
  out.push_back(static_cast<char>((u >> 24) & 0xff));
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                    (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) |
                    (static_cast<std::uint32_t>(p[3]) << 24);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

void write_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.flush()) throw IoError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot rename " + tmp + " to " + path);
}

std::string shape_text(const std::vector<int>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

std::vector<int> parse_shape(const std::string& text) {
  std::vector<int> shape;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find('x', pos);
    if (next == std::string::npos) next = text.size();
    shape.push_back(std::stoi(text.substr(pos, next - pos)));
    pos = next + 1;
  }
  return shape;
}

}  // namespace

std::string manifest_path_for(const std::string& bin_path) {
  std::size_t dot = bin_path.rfind('.');
  std::size_t slash = bin_path.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return bin_path + ".manifest";
  return bin_path.substr(0, dot) + ".manifest";
}

void save_checkpoint(const ParameterStore& store, const std::string& bin_path) {
  std::string blob;
  std::ostringstream manifest;
  std::size_t offset = 0;
  for (const auto& e : store.entries()) {
    manifest << e.name << " f32 " << shape_text(e.shape) << " " << offset << "\n";
    for (double v : e.value) put_f32_le(blob, static_cast<float>(v));
    offset += e.value.size() * 4;
  }
  write_atomic(bin_path, blob);
  write_atomic(manifest_path_for(bin_path), manifest.str());
}

void load_checkpoint(ParameterStore& store, const std::string& bin_path) {
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open " + bin_path);
  std::string blob((std::istreambuf_iterator<char>(bin)),
                   std::istreambuf_iterator<char>());

  std::string mpath = manifest_path_for(bin_path);
  std::ifstream man(mpath);
  if (!man) throw IoError("cannot open " + mpath);

  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(man, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string name, dtype, shape_str;
    std::size_t offset = 0;
    if (!(row >> name >> dtype >> shape_str >> offset))
      throw ParseError(mpath + ":" + std::to_string(lineno) + ": malformed manifest line");
    if (dtype != "f32")
      throw ParseError(mpath + ":" + std::to_string(lineno) + ": unsupported dtype " + dtype);
    if (!store.contains(name))
      throw ContractError("checkpoint names unknown parameter " + name);
    ParamEntry& e = store.at(name);
    std::vector<int> shape = parse_shape(shape_str);
    if (shape != e.shape)
      throw ShapeError("checkpoint shape mismatch for " + name);
    std::size_t bytes = e.value.size() * 4;
    if (offset + bytes > blob.size())
      throw ParseError(mpath + ": blob too small for " + name);
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data()) + offset;
    for (std::size_t i = 0; i < e.value.size(); ++i)
      e.value[i] = static_cast<double>(get_f32_le(p + i * 4));
    seen.insert(name);
  }
  for (const auto& e : store.entries())
    if (!seen.count(e.name))
      throw ContractError("checkpoint is missing parameter " + e.name);
}

}  // namespace sspfield
