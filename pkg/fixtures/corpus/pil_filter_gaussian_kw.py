import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
from PIL import ImageFilter
out = img.filter(ImageFilter.GaussianBlur(radius=2))
