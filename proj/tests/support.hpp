#pragma once

// Shared helpers for tests: scratch directories and fixture files.

#include <filesystem>
#include <fstream>
#include <string>

namespace testsupport {

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("mortenv_tests") / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string write_file(const std::filesystem::path& dir, const std::string& name,
                              const std::string& contents) {
    const auto path = dir / name;
    std::ofstream out(path);
    out << contents;
    return path.string();
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

}  // namespace testsupport
