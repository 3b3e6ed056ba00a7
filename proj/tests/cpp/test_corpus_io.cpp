#include <doctest.h>
#include "fignet/common.hpp"
#include <random>

#include <filesystem>
#include <fstream>

#include "fignet/corpus.hpp"
#include "fignet/render.hpp"

using namespace fignet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fignet_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

CorpusConfig small_config() {
    CorpusConfig cc;
    cc.palette_size = 8;
    cc.max_elements = 4;
    return cc;
}

}  // namespace

TEST_CASE("corpus round trip preserves figures, questions and palette") {
    TempDir tmp;
    const Corpus corpus = generate_corpus(small_config(), 10, 99);
    write_corpus(corpus, tmp.path.string());
    const Corpus back = read_corpus(tmp.path.string());

    CHECK(back.master_seed == corpus.master_seed);
    REQUIRE(back.palette.size() == corpus.palette.size());
    for (int i = 0; i < back.palette.size(); ++i) {
        CHECK(back.palette.at(i).name == corpus.palette.at(i).name);
        CHECK(back.palette.at(i).rgb == corpus.palette.at(i).rgb);
    }
    REQUIRE(back.figures.size() == corpus.figures.size());
    for (std::size_t i = 0; i < back.figures.size(); ++i) {
        CHECK(back.figures[i].figure_id == corpus.figures[i].figure_id);
        CHECK(back.figures[i].figure_type == corpus.figures[i].figure_type);
        REQUIRE(back.figures[i].elements.size() == corpus.figures[i].elements.size());
        for (std::size_t j = 0; j < back.figures[i].elements.size(); ++j) {
            CHECK(back.figures[i].elements[j].color_id == corpus.figures[i].elements[j].color_id);
            CHECK(back.figures[i].elements[j].value == corpus.figures[i].elements[j].value);
        }
    }
    REQUIRE(back.questions.size() == corpus.questions.size());
    for (std::size_t i = 0; i < back.questions.size(); ++i) {
        CHECK(back.questions[i].figure_id == corpus.questions[i].figure_id);
        CHECK(back.questions[i].template_id == corpus.questions[i].template_id);
        CHECK(back.questions[i].color1_id == corpus.questions[i].color1_id);
        CHECK(back.questions[i].color2_id == corpus.questions[i].color2_id);
        CHECK(back.questions[i].text == corpus.questions[i].text);
        CHECK(back.questions[i].answer == corpus.questions[i].answer);
    }
    // round trip of the written images
    const ImageU8 img = read_png(image_path(tmp.path.string(), corpus.figures[0].figure_id));
    CHECK(img.height == 128);
    CHECK(img.width == 128);
}

TEST_CASE("png write/read round trip is lossless") {
    TempDir tmp;
    const Corpus corpus = generate_corpus(small_config(), 1, 5);
    const ImageU8 img = render(corpus.figures[0], corpus.config);
    const std::string path = (tmp.path / "roundtrip.png").string();
    write_png(path, img);
    const ImageU8 back = read_png(path);
    CHECK(back.data == img.data);
}

TEST_CASE("corrupt annotation line is reported with its line number") {
    TempDir tmp;
    write_corpus(generate_corpus(small_config(), 3, 7), tmp.path.string());
    {
        std::ifstream in(tmp.path / "annotations.jsonl");
        std::string all, line;
        int n = 0;
        while (std::getline(in, line)) {
            ++n;
            all += (n == 2 ? "{not json" : line) + "\n";
        }
        std::ofstream out(tmp.path / "annotations.jsonl");
        out << all;
    }
    CHECK_THROWS_WITH_AS(read_corpus(tmp.path.string()), doctest::Contains("line 2"), LoadError);
}

TEST_CASE("unknown figure_type token is a schema error") {
    TempDir tmp;
    write_corpus(generate_corpus(small_config(), 2, 8), tmp.path.string());
    {
        std::ifstream in(tmp.path / "annotations.jsonl");
        std::string all, line;
        while (std::getline(in, line)) {
            const auto pos = all.empty() ? line.find("\"figure_type\":\"") : std::string::npos;
            if (pos != std::string::npos) {
                const auto vstart = pos + 15;
                const auto vend = line.find('"', vstart);
                line = line.substr(0, vstart) + "spiral" + line.substr(vend);
            }
            all += line + "\n";
        }
        std::ofstream out(tmp.path / "annotations.jsonl");
        out << all;
    }
    CHECK_THROWS_WITH_AS(read_corpus(tmp.path.string()), doctest::Contains("spiral"), LoadError);
}

TEST_CASE("missing files and inconsistent records are load errors") {
    TempDir tmp;
    SUBCASE("missing directory") {
        CHECK_THROWS_AS(read_corpus((tmp.path / "nope").string()), LoadError);
    }
    SUBCASE("missing qa file") {
        write_corpus(generate_corpus(small_config(), 2, 8), tmp.path.string());
        fs::remove(tmp.path / "qa.jsonl");
        CHECK_THROWS_AS(read_corpus(tmp.path.string()), LoadError);
    }
    SUBCASE("palette/figure inconsistency") {
        write_corpus(generate_corpus(small_config(), 2, 8), tmp.path.string());
        std::string all, line;
        {
            std::ifstream in(tmp.path / "annotations.jsonl");
            bool first = true;
            while (std::getline(in, line)) {
                if (first) {
                    const auto pos = line.find("\"color_id\":");
                    line = line.substr(0, pos) + "\"color_id\":99," +
                           line.substr(line.find(',', pos) + 1);
                    first = false;
                }
                all += line + "\n";
            }
        }
        std::ofstream(tmp.path / "annotations.jsonl") << all;
        CHECK_THROWS_WITH_AS(read_corpus(tmp.path.string()), doctest::Contains("palette"), LoadError);
    }
}

TEST_CASE("public dataset layout shim") {
    TempDir tmp;
    std::ofstream(tmp.path / "annotations.json") << R"([
      {"image_index": 0, "type": "vbar_categorical", "models": [
         {"name": "royal blue", "color": [65, 105, 225], "ys": [3.5]},
         {"name": "tomato", "color": [255, 99, 71], "ys": [8.25]}]},
      {"image_index": 1, "type": "pie", "models": [
         {"name": "aqua", "color": [0, 255, 255], "spans": [1.5]},
         {"name": "royal blue", "color": [65, 105, 225], "spans": [2.5]}]}
    ])";
    std::ofstream(tmp.path / "qa_pairs.json") << R"({"qa_pairs": [
      {"image_index": 0, "question_string": "Is royal blue less than tomato?",
       "color1_id": 0, "color2_id": 1, "answer": 1},
      {"image_index": 1, "question_string": "Is aqua the minimum?",
       "color1_id": 0, "color2_id": -1, "answer": 1}
    ]})";

    const Corpus corpus = read_corpus(tmp.path.string());
    REQUIRE(corpus.figures.size() == 2);
    CHECK(corpus.figures[0].figure_type == FigureType::vbar);
    CHECK(corpus.figures[0].elements[0].value == 3.5);
    CHECK(corpus.figures[1].figure_type == FigureType::pie);
    CHECK(corpus.palette.size() == 3);  // royal blue, tomato, aqua (dedup by name)
    REQUIRE(corpus.questions.size() == 2);
    CHECK(corpus.questions[0].template_id == TemplateId::less_than);
    CHECK(corpus.questions[0].answer);
    CHECK(corpus.questions[1].template_id == TemplateId::min);
    CHECK(!corpus.questions[1].color2_id);
}
