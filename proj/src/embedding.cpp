#include "embedding.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include "rng.hpp"
#include "util.hpp"

namespace emo2vec {

EmbeddingMatrix init_random(Vocabulary vocab, std::size_t dim,
                            std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("init_random: dim must be positive");
  EmbeddingMatrix out;
  out.dim = dim;
  out.table = DenseMatrix(static_cast<std::size_t>(vocab.size()), dim);
  out.vocab = std::move(vocab);
  Rng rng(seed);
  const double half = 0.5 / static_cast<double>(dim);
  for (std::size_t r = 0; r < out.table.rows; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      out.table(r, c) = rng.next_uniform(-half, half);
    }
  }
  std::fill(out.table.row(Vocabulary::kPadId).begin(),
            out.table.row(Vocabulary::kPadId).end(), 0.0);
  return out;
}

DenseMatrix lookup(const EmbeddingMatrix& matrix,
                   const EncodedSentence& sentence) {
  DenseMatrix out(sentence.padded_len(), matrix.dim);
  for (std::size_t t = 0; t < sentence.ids.size(); ++t) {
    const int id = sentence.ids[t];
    if (id < 0 || id >= matrix.vocab.size()) {
      throw std::invalid_argument("lookup: token id out of range");
    }
    auto src = matrix.table.row(static_cast<std::size_t>(id));
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

void accumulate_sparse_grad(DenseMatrix& grad_buffer,
                            const EncodedSentence& sentence,
                            const DenseMatrix& upstream) {
  if (upstream.rows != sentence.padded_len() ||
      upstream.cols != grad_buffer.cols) {
    throw std::invalid_argument("accumulate_sparse_grad: shape mismatch");
  }
  for (std::size_t t = 0; t < sentence.ids.size(); ++t) {
    const int id = sentence.ids[t];
    if (id == Vocabulary::kPadId) continue;
    if (id < 0 || static_cast<std::size_t>(id) >= grad_buffer.rows) {
      throw std::invalid_argument("accumulate_sparse_grad: token id out of range");
    }
    auto dst = grad_buffer.row(static_cast<std::size_t>(id));
    auto src = upstream.row(t);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
  }
}

void export_text(const EmbeddingMatrix& matrix,
                 const std::filesystem::path& path) {
  std::ostringstream out;
  const int first = Vocabulary::kUnkId + 1;
  out << (matrix.vocab.size() - first) << ' ' << matrix.dim << '\n';
  for (int id = first; id < matrix.vocab.size(); ++id) {
    out << matrix.vocab.words[static_cast<std::size_t>(id)];
    auto row = matrix.table.row(static_cast<std::size_t>(id));
    for (double v : row) out << ' ' << format_double(v);
    out << '\n';
  }
  write_file(path, out.str());
}

namespace {

// gzopen reads plain files transparently, so one path covers both encodings.
std::string read_maybe_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open file: " + path.string());
  std::string content;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) {
    content.append(buf, static_cast<std::size_t>(n));
  }
  if (n < 0) {
    int errnum = 0;
    std::string msg = gzerror(f, &errnum);
    gzclose(f);
    throw IoError("gzip read failed: " + path.string() + ": " + msg);
  }
  gzclose(f);
  return content;
}

bool parse_header_line(const std::string& line, std::size_t& count,
                       std::size_t& dim) {
  std::istringstream in(line);
  long long a = 0, b = 0;
  std::string extra;
  if (!(in >> a >> b) || (in >> extra) || a < 0 || b <= 0) return false;
  count = static_cast<std::size_t>(a);
  dim = static_cast<std::size_t>(b);
  return true;
}

}  // namespace

EmbeddingMatrix import_text(const std::filesystem::path& path) {
  const std::string content = read_maybe_gzip(path);
  std::istringstream in(content);

  EmbeddingMatrix out;
  Vocabulary vocab = Vocabulary::with_specials();
  std::vector<std::vector<double>> rows;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      std::size_t hcount = 0, hdim = 0;
      if (parse_header_line(line, hcount, hdim)) {
        dim = hdim;
        saw_header = true;
        continue;
      }
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::size_t space = line.find(' ');
    if (space == std::string::npos || space == 0) {
      throw ParseError(where + ": expected `word v1 ... vk`");
    }
    std::string word = line.substr(0, space);
    std::vector<double> values;
    const char* p = line.c_str() + space;
    char* end = nullptr;
    while (*p != '\0') {
      while (*p == ' ') ++p;
      if (*p == '\0') break;
      double v = std::strtod(p, &end);
      if (end == p) throw ParseError(where + ": malformed number");
      values.push_back(v);
      p = end;
    }
    if (values.empty()) throw ParseError(where + ": no values");
    if (dim == 0) {
      dim = values.size();
    } else if (values.size() != dim) {
      throw ParseError(where + ": expected " + std::to_string(dim) +
                       " values, got " + std::to_string(values.size()));
    }
    if (vocab.contains(word)) continue;  // keep the first occurrence
    vocab.add(std::move(word));
    rows.push_back(std::move(values));
  }
  if (dim == 0) {
    throw ParseError(path.string() + ": no vectors found" +
                     (saw_header ? " after header" : ""));
  }

  out.dim = dim;
  out.table = DenseMatrix(static_cast<std::size_t>(vocab.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto dst = out.table.row(i + 2);  // skip PAD/UNK rows (zeros)
    std::copy(rows[i].begin(), rows[i].end(), dst.begin());
  }
  out.vocab = std::move(vocab);
  return out;
}

EmbeddingMatrix concat(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  Vocabulary vocab = Vocabulary::with_specials();
  const int first = Vocabulary::kUnkId + 1;
  for (int id = first; id < a.vocab.size(); ++id) {
    vocab.add(a.vocab.words[static_cast<std::size_t>(id)]);
  }
  std::vector<std::string> b_only;
  for (int id = first; id < b.vocab.size(); ++id) {
    const std::string& w = b.vocab.words[static_cast<std::size_t>(id)];
    if (!a.vocab.contains(w)) b_only.push_back(w);
  }
  std::sort(b_only.begin(), b_only.end());
  for (std::string& w : b_only) vocab.add(std::move(w));

  EmbeddingMatrix out;
  out.dim = a.dim + b.dim;
  out.table = DenseMatrix(static_cast<std::size_t>(vocab.size()), out.dim);
  for (int id = Vocabulary::kUnkId; id < vocab.size(); ++id) {
    const std::string& w = vocab.words[static_cast<std::size_t>(id)];
    auto dst = out.table.row(static_cast<std::size_t>(id));
    // UNK concatenates both UNK rows; PAD stays zero.
    const int ida = id == Vocabulary::kUnkId ? Vocabulary::kUnkId
                    : a.vocab.contains(w)    ? a.vocab.id_of(w)
                                             : -1;
    const int idb = id == Vocabulary::kUnkId ? Vocabulary::kUnkId
                    : b.vocab.contains(w)    ? b.vocab.id_of(w)
                                             : -1;
    if (ida >= 0) {
      auto src = a.table.row(static_cast<std::size_t>(ida));
      std::copy(src.begin(), src.end(), dst.begin());
    }
    if (idb >= 0) {
      auto src = b.table.row(static_cast<std::size_t>(idb));
      std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.dim));
    }
  }
  out.vocab = std::move(vocab);
  return out;
}

}  // namespace emo2vec
