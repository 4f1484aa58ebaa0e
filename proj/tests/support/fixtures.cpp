#include "support/fixtures.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sempaste/image_codec.hpp"

namespace fs = std::filesystem;

namespace sempaste::testing {

namespace {
std::atomic<int> g_dir_counter{0};
}

TempDir::TempDir(const std::string& tag) {
  path = fs::temp_directory_path() /
         ("sempaste_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
          std::to_string(g_dir_counter.fetch_add(1)));
  fs::create_directories(path);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path, ec);
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string embedding_text(
    const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [token, values] : rows) {
    out << token;
    for (double v : values) out << " " << v;
    out << "\n";
  }
  return out.str();
}

Image solid_image(int w, int h, std::uint8_t r, std::uint8_t g,
                  std::uint8_t b) {
  return Image::constant(w, h, r, g, b);
}

Image random_image(int w, int h, RngStream& rng) {
  Image im(w, h);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        im.ch[c](y, x) = static_cast<std::uint8_t>(rng.uniform_index(256));
  return im;
}

Mask random_mask(int w, int h, double density, RngStream& rng) {
  Mask m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      m(y, x) = rng.uniform() < density ? 1 : 0;
  return m;
}

namespace {

// Each toy image gets a deterministic backdrop plus one solid block per
// object so crops are visually distinct.
Image render_toy_image(const ToyImage& spec) {
  RngStream rng(hash_str(spec.name));
  Image im = random_image(spec.w, spec.h, rng);
  for (const auto& obj : spec.objects) {
    RngStream color(hash_str(obj.category));
    std::uint8_t r = 64 + color.uniform_index(192);
    std::uint8_t g = 64 + color.uniform_index(192);
    std::uint8_t b = 64 + color.uniform_index(192);
    for (int y = obj.y; y < obj.y + obj.h; ++y)
      for (int x = obj.x; x < obj.x + obj.w; ++x) {
        im.ch[0](y, x) = r;
        im.ch[1](y, x) = g;
        im.ch[2](y, x) = b;
      }
  }
  return im;
}

}  // namespace

std::string write_coco_dataset(const fs::path& root,
                               const std::vector<ToyImage>& images,
                               bool with_segmentation) {
  fs::create_directories(root / "images");

  std::set<std::string> names;
  for (const auto& img : images)
    for (const auto& obj : img.objects) names.insert(obj.category);
  std::map<std::string, int> cat_ids;
  Json categories = Json::array();
  int next = 1;
  for (const auto& name : names) {
    cat_ids[name] = next;
    Json c = Json::object();
    c["id"] = next;
    c["name"] = name;
    categories.push_back(std::move(c));
    ++next;
  }

  Json jimages = Json::array();
  Json jann = Json::array();
  long long ann_id = 1;
  long long image_id = 1;
  for (const auto& img : images) {
    write_png((root / "images" / (img.name + ".png")).string(),
              render_toy_image(img));
    Json ji = Json::object();
    ji["id"] = image_id;
    ji["file_name"] = img.name + ".png";
    ji["width"] = img.w;
    ji["height"] = img.h;
    jimages.push_back(std::move(ji));

    for (const auto& obj : img.objects) {
      Json ja = Json::object();
      ja["id"] = ann_id++;
      ja["image_id"] = image_id;
      ja["category_id"] = cat_ids[obj.category];
      ja["bbox"] = Json::array({obj.x, obj.y, obj.w, obj.h});
      ja["area"] = obj.w * obj.h;
      ja["iscrowd"] = 0;
      if (with_segmentation) {
        double x0 = obj.x, y0 = obj.y;
        double x1 = obj.x + obj.w, y1 = obj.y + obj.h;
        ja["segmentation"] =
            Json::array({Json::array({x0, y0, x1, y0, x1, y1, x0, y1})});
      }
      jann.push_back(std::move(ja));
    }
    ++image_id;
  }

  Json rootjson = Json::object();
  rootjson["images"] = std::move(jimages);
  rootjson["annotations"] = std::move(jann);
  rootjson["categories"] = std::move(categories);

  fs::path ann_path = root / "annotations.json";
  std::ofstream out(ann_path);
  out << rootjson.dump(1) << "\n";
  return ann_path.string();
}

void write_voc_dataset(const fs::path& root,
                       const std::vector<ToyImage>& images,
                       bool with_gt_masks) {
  fs::create_directories(root / "Annotations");
  fs::create_directories(root / "JPEGImages");
  if (with_gt_masks) fs::create_directories(root / "SegmentationObject");

  for (const auto& img : images) {
    write_png((root / "JPEGImages" / (img.name + ".png")).string(),
              render_toy_image(img));

    std::ostringstream xml;
    xml << "<annotation>\n";
    xml << "  <folder>JPEGImages</folder>\n";
    xml << "  <filename>" << img.name << ".png</filename>\n";
    xml << "  <size>\n    <width>" << img.w << "</width>\n    <height>"
        << img.h << "</height>\n    <depth>3</depth>\n  </size>\n";
    for (const auto& obj : img.objects) {
      xml << "  <object>\n";
      xml << "    <name>" << obj.category << "</name>\n";
      xml << "    <pose>Unspecified</pose>\n";
      xml << "    <truncated>0</truncated>\n";
      xml << "    <difficult>0</difficult>\n";
      xml << "    <bndbox>\n";
      xml << "      <xmin>" << obj.x + 1 << "</xmin>\n";
      xml << "      <ymin>" << obj.y + 1 << "</ymin>\n";
      xml << "      <xmax>" << obj.x + obj.w << "</xmax>\n";
      xml << "      <ymax>" << obj.y + obj.h << "</ymax>\n";
      xml << "    </bndbox>\n";
      xml << "  </object>\n";
    }
    xml << "</annotation>\n";
    write_file(root / "Annotations" / (img.name + ".xml"), xml.str());

    if (with_gt_masks) {
      PlaneU8 plane = PlaneU8::Zero(img.h, img.w);
      for (std::size_t k = 0; k < img.objects.size(); ++k) {
        const auto& obj = img.objects[k];
        for (int y = obj.y; y < obj.y + obj.h; ++y)
          for (int x = obj.x; x < obj.x + obj.w; ++x)
            plane(y, x) = static_cast<std::uint8_t>(k + 1);
      }
      write_gray_png(
          (root / "SegmentationObject" / (img.name + ".png")).string(), plane);
    }
  }
}

std::uint64_t tree_digest(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& f : files) {
    mix(fs::relative(f, root).string());
    mix("\x01");
    mix(read_file(f));
    mix("\x02");
  }
  return h;
}

}  // namespace sempaste::testing
