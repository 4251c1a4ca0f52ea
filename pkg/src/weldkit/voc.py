"""PASCAL VOC annotation reading and writing.

VOC files store 1-based inclusive integer pixel coordinates: a box covering
pixel columns 1..41 has xmin=1, xmax=41. Internally boxes are 0-based
continuous, so ingest maps (xmin, ymin, xmax, ymax) to
(xmin-1, ymin-1, xmax, ymax) and writing applies the inverse with
round-half-up of fractional coordinates.
"""

from __future__ import annotations

import logging
import math
import shutil
import xml.etree.ElementTree as ET
from pathlib import Path

from PIL import Image

from .dataset import Annotation, Dataset, ImageRecord
from .geometry import BBox, clip

log = logging.getLogger(__name__)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _require(elem: ET.Element, tag: str, path: Path) -> ET.Element:
    child = elem.find(tag)
    if child is None:
        raise ValueError(f"{path.name}: missing <{tag}> element")
    return child


def _number(elem: ET.Element, tag: str, path: Path) -> float:
    child = _require(elem, tag, path)
    try:
        return float(child.text)
    except (TypeError, ValueError):
        raise ValueError(f"{path.name}: <{tag}> is not a number: {child.text!r}") from None


def _check_readable_image(path: Path) -> None:
    try:
        with Image.open(path) as im:
            im.verify()
    except FileNotFoundError:
        raise ValueError(f"image file not found: {path}") from None
    except Exception as exc:
        raise ValueError(f"unreadable image file {path}: {exc}") from None


def load_voc(directory: str | Path) -> Dataset:
    """Load a VOC-labelled dataset: one annotation XML per image.

    Boxes are converted to 0-based continuous coordinates and clipped to the
    image frame; a box that clips away entirely is dropped with a warning.
    An empty directory yields an empty dataset.
    """
    directory = Path(directory)
    images: list[ImageRecord] = []
    annotations: list[Annotation] = []

    for xml_path in sorted(directory.glob("*.xml")):
        try:
            root = ET.parse(xml_path).getroot()
        except ET.ParseError as exc:
            raise ValueError(f"{xml_path.name}: malformed XML: {exc}") from None

        filename = _require(root, "filename", xml_path).text
        if not filename:
            raise ValueError(f"{xml_path.name}: empty <filename>")
        size = _require(root, "size", xml_path)
        width = int(_number(size, "width", xml_path))
        height = int(_number(size, "height", xml_path))
        depth = int(_number(size, "depth", xml_path))

        file_path = directory / filename
        _check_readable_image(file_path)

        image_id = xml_path.stem
        images.append(
            ImageRecord(
                image_id=image_id,
                file_path=file_path,
                width=width,
                height=height,
                channels=depth,
            )
        )

        for obj in root.findall("object"):
            name = _require(obj, "name", xml_path).text
            if not name:
                raise ValueError(f"{xml_path.name}: empty <name> in <object>")
            bnd = _require(obj, "bndbox", xml_path)
            xmin = _number(bnd, "xmin", xml_path)
            ymin = _number(bnd, "ymin", xml_path)
            xmax = _number(bnd, "xmax", xml_path)
            ymax = _number(bnd, "ymax", xml_path)
            box = BBox(xmin - 1.0, ymin - 1.0, float(xmax), float(ymax))
            clipped = clip(box, width, height)
            if clipped is None:
                log.warning("%s: box %s lies outside the image, dropped", xml_path.name, box)
                continue
            annotations.append(Annotation(image_id=image_id, label=name, box=clipped))

    return Dataset(images=images, annotations=annotations)


def _voc_xml(record: ImageRecord, anns: list[Annotation]) -> bytes:
    root = ET.Element("annotation")
    ET.SubElement(root, "filename").text = record.file_path.name
    size = ET.SubElement(root, "size")
    ET.SubElement(size, "width").text = str(record.width)
    ET.SubElement(size, "height").text = str(record.height)
    ET.SubElement(size, "depth").text = str(record.channels)
    for ann in anns:
        obj = ET.SubElement(root, "object")
        ET.SubElement(obj, "name").text = ann.label
        bnd = ET.SubElement(obj, "bndbox")
        ET.SubElement(bnd, "xmin").text = str(_round_half_up(ann.box.x_min) + 1)
        ET.SubElement(bnd, "ymin").text = str(_round_half_up(ann.box.y_min) + 1)
        ET.SubElement(bnd, "xmax").text = str(_round_half_up(ann.box.x_max))
        ET.SubElement(bnd, "ymax").text = str(_round_half_up(ann.box.y_max))
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return ET.tostring(root, encoding="utf-8") + b"\n"


def write_voc(d: Dataset, directory: str | Path) -> None:
    """Write a dataset as VOC XMLs plus image files into `directory`.

    Image files are copied byte-for-byte when they do not already live in the
    target directory. Loading the written directory reproduces the dataset up
    to rounding of box coordinates to VOC integers.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    by_image: dict[str, list[Annotation]] = {r.image_id: [] for r in d.images}
    for ann in d.annotations:
        by_image[ann.image_id].append(ann)

    for record in d.images:
        target = directory / record.file_path.name
        if target.resolve() != record.file_path.resolve():
            try:
                shutil.copyfile(record.file_path, target)
            except OSError as exc:
                raise OSError(f"cannot copy image {record.file_path}: {exc}") from None
        xml_path = directory / f"{record.image_id}.xml"
        try:
            xml_path.write_bytes(_voc_xml(record, by_image[record.image_id]))
        except OSError as exc:
            raise OSError(f"cannot write annotation {xml_path}: {exc}") from None
