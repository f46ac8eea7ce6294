import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
from PIL import ImageEnhance
out = ImageEnhance.Brightness(img).enhance(2.0)
