#include "sdssar/stack_io.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "sdssar/errors.hpp"

namespace sdssar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string sub_name(std::size_t j, FileFormat format) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sub_%02zu%s", j, format == FileFormat::raw_float ? ".raw" : ".pgm");
    return buf;
}

}  // namespace

void write_stack(const fs::path& dir, const SubImageStack& stack, FileFormat format) {
    stack.validate();
    fs::create_directories(dir);
    json files = json::array();
    for (std::size_t j = 0; j < stack.count(); ++j) {
        const auto name = sub_name(j, format);
        write_image(dir / name, stack.subimages[j], format, format == FileFormat::pgm16 ? 65535 : 255);
        files.push_back(name);
    }
    {
        std::ofstream os(dir / "positions.bin", std::ios::binary);
        if (!os) throw IoError("cannot write " + (dir / "positions.bin").string());
        const std::size_t sub = stack.sub_size();
        for (std::size_t i = 0; i < stack.positions.size(); ++i) {
            const std::uint32_t t[3] = {static_cast<std::uint32_t>(i / sub), stack.positions.rows[i],
                                        stack.positions.cols[i]};
            os.write(reinterpret_cast<const char*>(t), sizeof t);
        }
    }
    const json manifest{{"k", stack.k},
                        {"source_width", stack.source_width},
                        {"source_height", stack.source_height},
                        {"sub_width", stack.sub_width()},
                        {"sub_height", stack.sub_height()},
                        {"count", stack.count()},
                        {"files", files},
                        {"positions", "positions.bin"}};
    std::ofstream ms(dir / "manifest.json");
    if (!ms) throw IoError("cannot write stack manifest");
    ms << manifest.dump(2) << '\n';
}

SubImageStack read_stack(const fs::path& dir) {
    std::ifstream ms(dir / "manifest.json");
    if (!ms) throw CorruptedStack("stack manifest missing in " + dir.string());
    SubImageStack stack;
    std::vector<std::string> files;
    try {
        const json m = json::parse(ms);
        stack.k = m.at("k").get<std::size_t>();
        stack.source_width = m.at("source_width").get<std::size_t>();
        stack.source_height = m.at("source_height").get<std::size_t>();
        files = m.at("files").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw CorruptedStack(std::string("stack manifest: ") + e.what());
    }
    if (stack.k < 2 || files.size() != stack.k * stack.k) throw CorruptedStack("stack manifest: bad sub-image count");
    for (const auto& f : files) {
        try {
            stack.subimages.push_back(read_image(dir / f).image);
        } catch (const Error& e) {
            throw CorruptedStack("stack sub-image " + f + ": " + e.what());
        }
    }
    const std::size_t total = files.size() * stack.sub_size();
    std::ifstream ps(dir / "positions.bin", std::ios::binary);
    if (!ps) throw CorruptedStack("stack positions missing");
    std::vector<std::uint32_t> raw(3 * total);
    if (!ps.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4)) ||
        ps.peek() != std::char_traits<char>::eof()) {
        throw CorruptedStack("stack positions: wrong length");
    }
    const std::size_t sub = stack.sub_size();
    stack.positions.rows.resize(total);
    stack.positions.cols.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        if (raw[3 * i] != i / sub) throw CorruptedStack("stack positions: index column out of order");
        stack.positions.rows[i] = raw[3 * i + 1];
        stack.positions.cols[i] = raw[3 * i + 2];
    }
    stack.validate();
    return stack;
}

}  // namespace sdssar
