#pragma once

#include <casbridge/mock_script.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace casbridge::testing {

inline std::filesystem::path corpus_dir() { return CASBRIDGE_TEST_CORPUS_DIR; }
inline std::filesystem::path golden_dir() { return CASBRIDGE_TEST_GOLDEN_DIR; }

struct CorpusInfo {
    std::string name;
    std::string profile;
};

inline const std::vector<CorpusInfo>& corpora() {
    static const std::vector<CorpusInfo> all{{"corpus1", "maxima"}, {"corpus2", "mupad"}, {"corpus3", "reduce"}};
    return all;
}

inline MockScript load_corpus(const std::string& name) { return load_mock_script(corpus_dir() / (name + ".json")); }

// Total emit_latex payloads over the three corpora, fixed when they were transcribed.
inline constexpr std::size_t kCorpusMathPayloads = 41;

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline bool updating_goldens() {
    const char* v = std::getenv("CASBRIDGE_UPDATE_GOLDEN");
    return v != nullptr && std::string(v) == "1";
}

}  // namespace casbridge::testing
