#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cbf/diagnostics.hpp"

namespace cbf {

// ---------------------------------------------------------------------------
// CSV with RFC-4180-style quoting and fixed 17-significant-digit floats.

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    class Row {
      public:
        explicit Row(std::size_t expected) : expected_(expected) {}
        Row& add(const std::string& s) {
            cells_.push_back(quote(s));
            return *this;
        }
        Row& add(double v) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            cells_.emplace_back(buf);
            return *this;
        }
        Row& add(long long v) {
            cells_.push_back(std::to_string(v));
            return *this;
        }
        Row& add(int v) { return add(static_cast<long long>(v)); }
        Row& add(bool v) {
            cells_.emplace_back(v ? "true" : "false");
            return *this;
        }

        static std::string quote(const std::string& s) {
            if (s.find_first_of(",\"\n") == std::string::npos) return s;
            std::string q = "\"";
            for (char c : s) {
                if (c == '"') q += '"';
                q += c;
            }
            q += '"';
            return q;
        }

        std::string finish() const {
            if (cells_.size() != expected_)
                throw std::logic_error("csv row width does not match header");
            std::string line;
            for (std::size_t i = 0; i < cells_.size(); ++i) {
                if (i) line += ',';
                line += cells_[i];
            }
            return line;
        }

      private:
        std::size_t expected_;
        std::vector<std::string> cells_;
    };

    Row row() const { return Row(header_.size()); }

    void append(const Row& r) { lines_.push_back(r.finish()); }

    std::string text() const {
        std::string out;
        for (std::size_t i = 0; i < header_.size(); ++i) {
            if (i) out += ',';
            out += Row::quote(header_[i]);
        }
        out += '\n';
        for (const auto& l : lines_) {
            out += l;
            out += '\n';
        }
        return out;
    }

  private:
    std::vector<std::string> header_;
    std::vector<std::string> lines_;
};

// ---------------------------------------------------------------------------
// Artifact directory: atomic-ish writes, manifest with content hashes.

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

class ArtifactWriter {
  public:
    explicit ArtifactWriter(std::string dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    const std::string& dir() const { return dir_; }

    // Write via a temp file and rename; on failure remove the partial file.
    void write_text(const std::string& name, const std::string& content) {
        const std::string final_path = dir_ + "/" + name;
        const std::string tmp_path = final_path + ".tmp";
        {
            std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
            out.write(content.data(), static_cast<std::streamsize>(content.size()));
            out.flush();
            if (!out) {
                out.close();
                std::remove(tmp_path.c_str());
                throw std::runtime_error("failed writing artifact: " + final_path);
            }
        }
        std::error_code ec;
        std::filesystem::rename(tmp_path, final_path, ec);
        if (ec) {
            std::remove(tmp_path.c_str());
            throw std::runtime_error("failed finalizing artifact: " + final_path);
        }
        artifacts_[name] = fnv1a64(content);
    }

    void write_csv(const std::string& name, const CsvWriter& csv) { write_text(name, csv.text()); }

    void write_field_dump(const std::string& name, const SpectralField& f) {
        const std::string path = dir_ + "/" + name;
        cbf::write_field(path, f);
        std::ifstream in(path, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        artifacts_[name] = fnv1a64(content);
    }

    // One line per artifact, "<hex hash>  <name>", sorted by name.
    void write_manifest() {
        std::string text;
        for (const auto& [name, hash] : artifacts_) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
            text += std::string(buf) + "  " + name + "\n";
        }
        const std::string path = dir_ + "/manifest.txt";
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw std::runtime_error("failed writing manifest: " + path);
    }

  private:
    std::string dir_;
    std::map<std::string, std::uint64_t> artifacts_; // name -> hash, sorted
};

// ---------------------------------------------------------------------------
// Standard tables

inline CsvWriter series_csv(const RunRecord& rec) {
    CsvWriter csv({"t", "norm_H", "norm_V", "norm_Lr1", "energy_residual", "gronwall_ok"});
    for (std::size_t i = 0; i < rec.rows(); ++i) {
        auto row = csv.row();
        row.add(rec.times[i])
            .add(rec.h_norm[i])
            .add(rec.v_norm[i])
            .add(rec.lr_norm[i])
            .add(rec.energy_residual[i])
            .add(static_cast<bool>(rec.gronwall_ok[i]));
        csv.append(row);
    }
    return csv;
}

inline CsvWriter reports_csv(const std::vector<BoundReport>& reports) {
    CsvWriter csv({"name", "lhs", "rhs", "tolerance", "margin", "pass", "anchor"});
    for (const auto& r : reports) {
        auto row = csv.row();
        row.add(r.name).add(r.lhs).add(r.rhs).add(r.tolerance).add(r.margin).add(r.pass).add(
            r.anchor);
        csv.append(row);
    }
    return csv;
}

} // namespace cbf
