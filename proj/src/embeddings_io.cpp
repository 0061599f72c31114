#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "mixco/errors.hpp"
#include "mixco/training.hpp"

namespace mixco {

void write_embeddings(const Tensor& embeddings, std::span<const int> labels, const std::filesystem::path& path) {
    if (embeddings.rows() != labels.size()) {
        throw DimensionError("embedding export: row/label count mismatch");
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw FileError("cannot open '" + path.string() + "' for writing");
    }
    const std::size_t c = embeddings.cols();
    out << "# mixco-embeddings v1 N=" << embeddings.rows() << " C=" << c << " columns=label,v0..v" << (c - 1)
        << '\n';
    char buf[40];
    for (std::size_t i = 0; i < embeddings.rows(); ++i) {
        out << labels[i];
        for (double v : embeddings.row(i)) {
            std::snprintf(buf, sizeof buf, " %.17g", v);
            out << buf;
        }
        out << '\n';
    }
    out.flush();
    if (!out) {
        throw FileError("write to '" + path.string() + "' failed");
    }
}

void export_embeddings(const EncoderParams& encoder, const Dataset& dataset, const std::filesystem::path& path) {
    write_embeddings(embed(encoder, dataset.features), dataset.labels, path);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FileError("cannot open '" + path.string() + "' for reading");
    }
    std::string header;
    std::getline(in, header);
    std::size_t n = 0, c = 0;
    if (std::sscanf(header.c_str(), "# mixco-embeddings v1 N=%zu C=%zu", &n, &c) != 2) {
        throw FormatError("bad embedding file header", 0);
    }
    EmbeddingTable t{Tensor({n, c}), std::vector<int>(n)};
    std::string line;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) {
            throw FormatError("embedding file ends after " + std::to_string(i) + " rows", 0);
        }
        std::istringstream ss(line);
        std::string tok;
        ss >> t.labels[i];
        for (std::size_t j = 0; j < c; ++j) {
            if (!(ss >> tok)) {
                throw FormatError("embedding row " + std::to_string(i) + " is short", 0);
            }
            t.embeddings(i, j) = std::strtod(tok.c_str(), nullptr);
        }
    }
    return t;
}

}  // namespace mixco
