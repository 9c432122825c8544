#include "checkpoint.hpp"

#include <cstring>
#include <map>

#include "util.hpp"

namespace emo2vec {

namespace {

constexpr char kMagic[8] = {'E', '2', 'V', 'C', 'K', 'P', 'T', '1'};

struct BinWriter {
  std::string buf;

  void raw(const void* data, std::size_t len) {
    buf.append(static_cast<const char*>(data), len);
  }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 8);
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void matrix(const DenseMatrix& m) {
    u64(m.rows);
    u64(m.cols);
    for (double x : m.values) f64(x);
  }
};

struct BinReader {
  std::string_view buf;
  std::size_t pos = 0;
  std::string where;

  void need(std::uint64_t n) const {
    // subtraction form: pos + n could wrap on corrupt length fields
    if (n > buf.size() - pos) throw ParseError(where + ": truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= std::uint32_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= std::uint64_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    std::uint32_t len = u32();
    need(len);
    std::string s(buf.substr(pos, len));
    pos += len;
    return s;
  }
  // Guards count fields against corrupt (huge) values before any container
  // gets sized from them: n elements cannot outnumber the remaining bytes.
  std::uint64_t count(std::uint64_t min_bytes_each) {
    const std::uint64_t n = u64();
    if (min_bytes_each == 0 || n > (buf.size() - pos) / min_bytes_each) {
      throw ParseError(where + ": truncated checkpoint");
    }
    return n;
  }
  std::vector<double> doubles() {
    const std::uint64_t n = count(8);
    std::vector<double> v(n);
    for (std::uint64_t i = 0; i < n; ++i) v[i] = f64();
    return v;
  }
  DenseMatrix matrix() {
    DenseMatrix m;
    m.rows = u64();
    m.cols = u64();
    if (m.cols != 0 && m.rows > (buf.size() - pos) / 8 / m.cols) {
      throw ParseError(where + ": truncated checkpoint");
    }
    m.values.resize(m.rows * m.cols);
    for (double& x : m.values) x = f64();
    return m;
  }
  bool done() const { return pos == buf.size(); }
};

void write_section(BinWriter& out, std::string_view name, const std::string& payload) {
  out.str(name);
  out.u64(payload.size());
  out.raw(payload.data(), payload.size());
}

std::string encode_vocab(const Vocabulary& vocab) {
  BinWriter w;
  w.u64(static_cast<std::uint64_t>(vocab.size()));
  for (const std::string& word : vocab.words) w.str(word);
  return std::move(w.buf);
}

Vocabulary decode_vocab(BinReader& r) {
  const std::uint64_t n = r.count(4);  // one length field per word at least
  if (n < 2) throw ParseError(r.where + ": vocabulary missing specials");
  Vocabulary vocab;
  vocab.words.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string word = r.str();
    vocab.ids[word] = static_cast<int>(i);
    vocab.words.push_back(std::move(word));
  }
  return vocab;
}

std::string encode_cnn(const CnnParams& cnn) {
  BinWriter w;
  w.u64(cnn.widths.size());
  for (std::size_t width : cnn.widths) w.u64(width);
  w.u64(cnn.per_width);
  w.u64(cnn.dim);
  w.u64(cnn.classes);
  w.u64(cnn.filters.size());
  for (const DenseMatrix& f : cnn.filters) w.matrix(f);
  w.doubles(cnn.filter_bias);
  w.matrix(cnn.output_w);
  w.doubles(cnn.output_b);
  return std::move(w.buf);
}

CnnParams decode_cnn(BinReader& r) {
  CnnParams cnn;
  const std::uint64_t nwidths = r.count(8);
  cnn.widths.resize(nwidths);
  for (auto& width : cnn.widths) width = r.u64();
  cnn.per_width = r.u64();
  cnn.dim = r.u64();
  cnn.classes = r.u64();
  const std::uint64_t nfilters = r.count(16);  // rows + cols headers
  cnn.filters.reserve(nfilters);
  for (std::uint64_t j = 0; j < nfilters; ++j) cnn.filters.push_back(r.matrix());
  cnn.filter_bias = r.doubles();
  cnn.output_w = r.matrix();
  cnn.output_b = r.doubles();
  if (cnn.filters.size() != cnn.filter_count() ||
      cnn.filter_bias.size() != cnn.filter_count()) {
    throw ParseError(r.where + ": inconsistent CNN shape");
  }
  return cnn;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  BinWriter out;
  out.raw(kMagic, sizeof(kMagic));

  write_section(out, "config", config_to_json(ckpt.config));
  write_section(out, "vocab", encode_vocab(ckpt.model.embedding.vocab));
  {
    BinWriter w;
    w.u64(ckpt.model.embedding.dim);
    w.matrix(ckpt.model.embedding.table);
    write_section(out, "embedding", std::move(w.buf));
  }
  write_section(out, "cnn", encode_cnn(ckpt.model.cnn));
  {
    BinWriter w;
    w.u64(ckpt.model.heads.size());
    for (const LogRegParams& head : ckpt.model.heads) {
      w.str(head.dataset_name);
      w.matrix(head.weights);
      w.doubles(head.bias);
    }
    write_section(out, "heads", std::move(w.buf));
  }
  {
    BinWriter w;
    w.u64(ckpt.opt.states.size());
    for (const auto& [name, state] : ckpt.opt.states) {
      w.str(name);
      w.i64(state.step);
      w.doubles(state.m);
      w.doubles(state.v);
    }
    write_section(out, "adam", std::move(w.buf));
  }
  {
    BinWriter w;
    w.u64(ckpt.epoch);
    w.f64(ckpt.best_dev);
    write_section(out, "meta", std::move(w.buf));
  }
  write_file(path, out.buf);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  if (content.size() < sizeof(kMagic) ||
      std::memcmp(content.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path.string() + ": not an emo2vec checkpoint");
  }
  BinReader top{std::string_view(content).substr(sizeof(kMagic)), 0, path.string()};
  std::map<std::string, std::string> sections;
  while (!top.done()) {
    std::string name = top.str();
    const std::uint64_t len = top.u64();
    top.need(len);
    sections[name] = std::string(top.buf.substr(top.pos, len));
    top.pos += len;
  }
  auto section = [&](const char* name) -> BinReader {
    auto it = sections.find(name);
    if (it == sections.end()) {
      throw ParseError(path.string() + ": missing section " + name);
    }
    return BinReader{it->second, 0, path.string() + ":" + name};
  };

  Checkpoint ckpt;
  {
    auto it = sections.find("config");
    if (it == sections.end()) {
      throw ParseError(path.string() + ": missing section config");
    }
    ckpt.config = config_from_json(it->second);
  }

  {
    BinReader r = section("vocab");
    ckpt.model.embedding.vocab = decode_vocab(r);
  }
  {
    BinReader r = section("embedding");
    ckpt.model.embedding.dim = r.u64();
    ckpt.model.embedding.table = r.matrix();
    if (ckpt.model.embedding.table.rows !=
            static_cast<std::size_t>(ckpt.model.embedding.vocab.size()) ||
        ckpt.model.embedding.table.cols != ckpt.model.embedding.dim) {
      throw ParseError(path.string() + ": embedding shape mismatch");
    }
  }
  {
    BinReader r = section("cnn");
    ckpt.model.cnn = decode_cnn(r);
  }
  {
    BinReader r = section("heads");
    const std::uint64_t nheads = r.count(4);
    for (std::uint64_t h = 0; h < nheads; ++h) {
      LogRegParams head;
      head.dataset_name = r.str();
      head.weights = r.matrix();
      head.bias = r.doubles();
      ckpt.model.heads.push_back(std::move(head));
    }
  }
  {
    BinReader r = section("adam");
    const std::uint64_t nstates = r.count(4);
    for (std::uint64_t i = 0; i < nstates; ++i) {
      std::string name = r.str();
      AdamState state;
      state.step = r.i64();
      state.m = r.doubles();
      state.v = r.doubles();
      ckpt.opt.states.emplace_back(std::move(name), std::move(state));
    }
  }
  {
    BinReader r = section("meta");
    ckpt.epoch = r.u64();
    ckpt.best_dev = r.f64();
  }
  return ckpt;
}

}  // namespace emo2vec
