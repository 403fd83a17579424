#include "curator/detector/detector.hpp"

#include "curator/catalog/catalog.hpp"
#include "curator/common/errors.hpp"
#include "curator/common/image_io.hpp"
#include "curator/synth/shapes.hpp"
#include "support/temp_dir.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace curator;
using namespace curator::detector;
using catalog::Annotation;
using catalog::BBox;
using curator::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  TempDir dir;
  catalog::Catalog cat{dir / "catalog"};

  // Writes an image with a sidecar into the fixture directory and imports it.
  catalog::ImageRecord add(const std::string& stem, const std::vector<Annotation>& objects, int seed = 0) {
    fs::create_directories(dir / "src");
    cv::Mat m(80, 100, CV_8UC3, cv::Scalar(seed, 2 * seed, 100));
    const fs::path png = dir / "src" / (stem + ".png");
    write_file_atomic(png, encode_png(m));
    write_file_atomic(dir / "src" / (stem + ".txt"), catalog::format_annotations(objects));
    return cat.register_image(read_file(png), catalog::ImageSource::local_import, png.string(), "aeroplane");
  }
};

TEST(Oracle, EchoesSingleAnnotation) {
  Fixture f;
  const auto img = f.add("a", {{"aeroplane", {10, 10, 50, 40}}});
  OracleDetector oracle({});
  const auto dets = detect(oracle, f.cat, img);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].class_name, "aeroplane");
  EXPECT_EQ(dets[0].confidence, 1.0);
  EXPECT_EQ(dets[0].box, (BBox{10, 10, 50, 40}));
}

TEST(Oracle, EchoesTwoObjects) {
  Fixture f;
  const auto img = f.add("b", {{"person", {0, 0, 30, 60}}, {"sofa", {20, 30, 90, 78}}});
  OracleDetector oracle({});
  const auto dets = detect(oracle, f.cat, img);
  ASSERT_EQ(dets.size(), 2u);
  EXPECT_EQ(dets[0].class_name, "person");
  EXPECT_EQ(dets[1].class_name, "sofa");
}

TEST(Oracle, ResolvesAnnotationDirectoryAndFileUris) {
  Fixture f;
  fs::create_directories(f.dir / "ann");
  write_file_atomic(f.dir / "ann" / "remote.txt", std::string("dog 1 2 30 40\n"));
  const auto img = f.cat.register_image(encode_png(cv::Mat(50, 50, CV_8UC3, cv::Scalar(1, 2, 3))),
                                        catalog::ImageSource::crawl, "http://example.test/x/remote.png?s=1",
                                        "dog");
  OracleConfig config;
  config.annotation_dir = f.dir / "ann";
  EXPECT_EQ(detect(OracleDetector(config), f.cat, img).size(), 1u);
  EXPECT_THROW(detect(OracleDetector({}), f.cat, img), DetectionError);

  const auto local = f.add("c", {{"cat", {1, 1, 9, 9}}});
  auto with_scheme = local;
  with_scheme.origin_uri = "file://" + local.origin_uri;
  EXPECT_EQ(detect(OracleDetector({}), f.cat, with_scheme).size(), 1u);
}

TEST(Oracle, ClampsOutOfBoundsBoxesAndDropsEmptyOnes) {
  Fixture f;
  const auto img = f.add("d", {{"dog", {-10, -5, 200, 40}}, {"cat", {150, 10, 160, 20}}});
  const auto dets = detect(OracleDetector({}), f.cat, img);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].box, (BBox{0, 0, 100, 40}));
}

TEST(Oracle, OutOfVocabularyIsADetectionError) {
  Fixture f;
  const auto img = f.add("e", {{"zeppelin", {1, 1, 10, 10}}});
  EXPECT_THROW(detect(OracleDetector({}), f.cat, img), DetectionError);
}

TEST(Oracle, NoiseIsDeterministicAndNearTheConfiguredRate) {
  Fixture f;
  std::vector<catalog::ImageRecord> images;
  for (int i = 0; i < 200; ++i) {
    images.push_back(f.add("n" + std::to_string(i), {{"aeroplane", {1, 1, 20, 20}}}, i));
  }
  OracleConfig config;
  config.noise_rate = 0.1;
  config.noise_classes = {"aeroplane", "bicycle"};
  config.seed = 7;
  const OracleDetector a(config), b(config);
  int flipped = 0;
  for (const auto& img : images) {
    const auto da = detect(a, f.cat, img);
    EXPECT_EQ(da[0].class_name, detect(b, f.cat, img)[0].class_name);
    if (da[0].class_name != "aeroplane") {
      EXPECT_EQ(da[0].class_name, "bicycle");
      ++flipped;
    }
  }
  EXPECT_GT(flipped, 5);
  EXPECT_LT(flipped, 40);
  config.noise_classes = {"zeppelin"};
  EXPECT_THROW(OracleDetector{config}, ConfigurationError);
}

class FixedBackend final : public DetectorBackend {
 public:
  explicit FixedBackend(std::vector<Detection> d) : d_(std::move(d)) {}
  std::string name() const override { return "fixed"; }
  const std::vector<std::string>& vocabulary() const override { return catalog::voc_classes(); }
  double confidence_floor() const override { return 0.25; }
  std::vector<Detection> run(const catalog::ImageRecord&, const cv::Mat&) const override { return d_; }

 private:
  std::vector<Detection> d_;
};

TEST(Detect, FloorAndConfidenceOrdering) {
  Fixture f;
  const auto img = f.add("f", {});
  const FixedBackend backend({{"dog", 0.3, {0, 0, 10, 10}},
                              {"cat", 0.9, {0, 0, 10, 10}},
                              {"bird", 0.1, {0, 0, 10, 10}},
                              {"cow", 0.9, {5, 5, 10, 10}}});
  const auto dets = detect(backend, f.cat, img);
  ASSERT_EQ(dets.size(), 3u);
  EXPECT_EQ(dets[0].class_name, "cat");
  EXPECT_EQ(dets[1].class_name, "cow");
  EXPECT_EQ(dets[2].class_name, "dog");
}

TEST(Stage, SingleKeywordDetection) {
  Fixture f;
  const auto img = f.add("g", {{"aeroplane", {10, 10, 50, 40}}});
  const auto r = stage_classify(f.cat, OracleDetector({}), {img}, "aeroplane");
  EXPECT_EQ(r.keyword_count, 1u);
  EXPECT_EQ(r.non_keyword_count, 0u);
  const auto crop = f.cat.find_crop(r.crop_ids.at(0));
  EXPECT_EQ(crop->space, catalog::Space::keyword);
  EXPECT_EQ(crop->bbox, (BBox{10, 10, 50, 40}));
}

TEST(Stage, OtherClassesGoToTheKeywordsNonKeywordSpace) {
  Fixture f;
  const auto img = f.add("h", {{"person", {0, 0, 30, 60}}, {"sofa", {20, 30, 90, 78}}});
  const auto r = stage_classify(f.cat, OracleDetector({}), {img}, "aeroplane");
  EXPECT_EQ(r.keyword_count, 0u);
  EXPECT_EQ(r.non_keyword_count, 2u);
  EXPECT_EQ(f.cat.class_space("aeroplane").non_keyword_members.size(), 2u);
}

TEST(Stage, EmptyInputsAndPartition) {
  Fixture f;
  const auto none = stage_classify(f.cat, OracleDetector({}), {}, "aeroplane");
  EXPECT_EQ(none.keyword_count + none.non_keyword_count, 0u);
  const auto blank = f.add("i", {});
  const auto r0 = stage_classify(f.cat, OracleDetector({}), {blank}, "aeroplane");
  EXPECT_EQ(r0.keyword_count + r0.non_keyword_count, 0u);
  EXPECT_TRUE(f.cat.crops().empty());

  std::vector<catalog::ImageRecord> images;
  std::size_t total = 0;
  for (int i = 0; i < 12; ++i) {
    std::vector<Annotation> objs;
    for (int k = 0; k <= i % 3; ++k) {
      objs.push_back({k % 2 ? "dog" : "aeroplane", {k * 20, 0, k * 20 + 15, 15}});
    }
    total += objs.size();
    images.push_back(f.add("p" + std::to_string(i), objs, i + 1));
  }
  const auto r = stage_classify(f.cat, OracleDetector({}), images, "aeroplane");
  EXPECT_EQ(r.keyword_count + r.non_keyword_count, total);
  for (const auto& id : r.crop_ids) {
    const auto crop = f.cat.find_crop(id);
    const auto src = std::find_if(images.begin(), images.end(), [&](const auto& im) { return im.id == crop->parent_image; });
    ASSERT_NE(src, images.end());
  }
  EXPECT_THROW(stage_classify(f.cat, OracleDetector({}), images, "zeppelin"), ValidationError);
}

TEST(Stage, UndecodableImageIsRecordedAndOthersContinue) {
  Fixture f;
  const auto bad = f.add("j", {{"dog", {0, 0, 10, 10}}}, 1);
  const auto good = f.add("k", {{"dog", {0, 0, 10, 10}}}, 2);
  write_file_atomic(f.cat.image_path(bad), std::string("garbage"));
  const auto r = stage_classify(f.cat, OracleDetector({}), {bad, good}, "dog");
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].image_id, bad.id);
  EXPECT_EQ(r.keyword_count, 1u);
}

TEST(MatchCondition, Examples) {
  Fixture f;
  const auto both = f.add("m", {{"person", {0, 0, 30, 60}}, {"sofa", {20, 30, 90, 78}}});
  const auto one = f.add("o", {{"person", {0, 0, 30, 60}}}, 3);
  const OracleDetector oracle({});
  EXPECT_TRUE(match_condition(oracle, f.cat, both, {"person", "sofa"}));
  EXPECT_FALSE(match_condition(oracle, f.cat, one, {"person", "sofa"}));
  EXPECT_TRUE(match_condition(oracle, f.cat, one, {}));
  EXPECT_THROW(match_condition(oracle, f.cat, one, {"zeppelin"}), ValidationError);
}

TEST(Factory, BuildsBackendsFromJson) {
  const auto oracle = make_backend({{"backend", "oracle"}, {"confidence_floor", 0.5}});
  EXPECT_EQ(oracle->name(), "oracle");
  EXPECT_EQ(oracle->confidence_floor(), 0.5);
  EXPECT_EQ(oracle->vocabulary().size(), 20u);
  EXPECT_EQ(make_backend(nlohmann::json::object())->confidence_floor(), 0.25);
  EXPECT_THROW(make_backend({{"backend", "magic"}}), ConfigurationError);
  EXPECT_THROW(make_backend({{"backend", "onnx"}, {"model_path", "/nonexistent.onnx"}}), ConfigurationError);
}

// Needs a YOLOv10-N ONNX export; set CURATOR_YOLO_MODEL to run.
TEST(Onnx, BlankCanvasYieldsNoDetections) {
  const char* model = std::getenv("CURATOR_YOLO_MODEL");
  if (!model || !fs::exists(model)) GTEST_SKIP() << "CURATOR_YOLO_MODEL not set";
  Fixture f;
  const auto img = f.cat.register_image(encode_png(cv::Mat(480, 640, CV_8UC3, cv::Scalar(255, 255, 255))),
                                        catalog::ImageSource::local_import, "blank.png", "dog");
  const auto backend = make_backend({{"backend", "onnx"}, {"model_path", model}});
  EXPECT_TRUE(detect(*backend, f.cat, img).empty());
}

}  // namespace
