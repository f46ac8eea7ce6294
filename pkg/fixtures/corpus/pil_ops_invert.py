import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
from PIL import ImageOps
neg = ImageOps.invert(img.convert("RGB"))
