#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "format.hpp"

namespace lrd {

// Minimal CSV emitter: comma-separated cells, '\n' line ends, header row
// mandatory, UTF-8 pass-through.  Opened in binary mode so output bytes are
// platform-independent.
class csv_writer {
public:
    explicit csv_writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) {
            throw std::runtime_error("csv_writer: cannot open " + path);
        }
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

}  // namespace lrd
