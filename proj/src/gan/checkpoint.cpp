// Checkpoint layout: a text header of key=value lines closed by "blocks",
// then per block a line "block <name> <count>" followed by count
// little-endian IEEE-754 doubles, and a final "end" line.

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "corrgan/errors.hpp"
#include "corrgan/gan/model.hpp"

namespace corrgan::gan {
namespace {

constexpr const char* kMagic = "corrgan-checkpoint-1";

void write_block(std::ostream& out, const std::string& name, const double* data, Index count) {
  out << "block " << name << ' ' << count << '\n';
  for (Index k = 0; k < count; ++k) {
    auto bits = std::bit_cast<std::uint64_t>(data[k]);
    char bytes[8];
    for (char& byte : bytes) {
      byte = static_cast<char>(bits & 0xffu);
      bits >>= 8;
    }
    out.write(bytes, 8);
  }
  out << '\n';
}

void read_block(std::istream& in, const std::string& name, double* data, Index count) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("checkpoint: truncated before block " + name);
  std::istringstream header(line);
  std::string tag, got_name;
  Index got_count = -1;
  header >> tag >> got_name >> got_count;
  if (tag != "block" || got_name != name || got_count != count) {
    throw IoError("checkpoint: expected block '" + name + "' of " + std::to_string(count) + " values, found '" +
                  line + "'");
  }
  for (Index k = 0; k < count; ++k) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw IoError("checkpoint: truncated block " + name);
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[b];
    data[k] = std::bit_cast<double>(bits);
  }
  if (in.get() != '\n') throw IoError("checkpoint: block " + name + " is not terminated");
}

template <typename Fn>
void for_each_block(const GanModel& m, Fn&& fn) {
  for (const Slice& s : m.generator->param_slices()) fn(s, 'g', false);
  for (const Slice& s : m.generator->state_slices()) fn(s, 'g', true);
  for (const Slice& s : m.discriminator->param_slices()) fn(s, 'd', false);
  for (const Slice& s : m.discriminator->state_slices()) fn(s, 'd', true);
}

}  // namespace

void save_checkpoint(const GanModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  io::KeyValueFile header;
  model.arch.write(header);
  header.add("step", static_cast<long long>(model.step));
  header.add("seed", static_cast<unsigned long long>(model.seed));
  out << kMagic << '\n' << header.str() << "blocks\n";
  for_each_block(model, [&](const Slice& s, char net, bool state) {
    const Eigen::VectorXd& v = net == 'g' ? (state ? model.generator_state : model.generator_params)
                                          : (state ? model.discriminator_state : model.discriminator_params);
    write_block(out, s.name, v.data() + s.offset, s.size);
  });
  out << "end\n";
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

GanModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw IoError(path.string() + ": not a corrgan checkpoint");
  std::string header;
  while (std::getline(in, line) && line != "blocks") header += line + '\n';
  if (line != "blocks") throw IoError(path.string() + ": checkpoint header is not terminated");
  const io::KeyValueFile kv = io::KeyValueFile::parse(header);

  GanModel m = init_model(ArchitectureDescriptor::read(kv), 0);
  try {
    m.step = std::stoll(kv.get("step"));
    m.seed = std::stoull(kv.get("seed"));
  } catch (const std::logic_error&) {
    throw IoError(path.string() + ": malformed step or seed");
  }
  for_each_block(m, [&](const Slice& s, char net, bool state) {
    Eigen::VectorXd& v = net == 'g' ? (state ? m.generator_state : m.generator_params)
                                    : (state ? m.discriminator_state : m.discriminator_params);
    read_block(in, s.name, v.data() + s.offset, s.size);
  });
  if (!std::getline(in, line) || line != "end") throw IoError(path.string() + ": missing end marker");
  return m;
}

}  // namespace corrgan::gan
