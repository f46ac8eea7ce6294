import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
from PIL import ImageOps
out = ImageOps.autocontrast(img, cutoff=2)
